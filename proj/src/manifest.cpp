#include "clinfom/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clinfom/error.hpp"
#include "clinfom/version.hpp"

namespace clinfom {

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64_hex(buf.str());
}

std::string manifest_to_json(const RunManifest& manifest) {
  nlohmann::json obj{{"command", manifest.command},
                     {"args", manifest.args},
                     {"seed", manifest.seed},
                     {"tool_version", manifest.tool_version},
                     {"input_digests", manifest.input_digests}};
  return obj.dump(2) + "\n";
}

void write_manifest(RunManifest manifest, const std::vector<std::string>& input_paths,
                    const std::string& manifest_path) {
  manifest.tool_version = kToolVersion;
  for (const auto& path : input_paths) manifest.input_digests[path] = digest_file(path);
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + manifest_path);
  out << manifest_to_json(manifest);
}

}  // namespace clinfom
