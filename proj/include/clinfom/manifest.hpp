#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace clinfom {

// Provenance record written beside every command's outputs, before the
// outputs themselves.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> args;  // normalized flag map
  uint64_t seed = 0;
  std::string tool_version;
  std::map<std::string, std::string> input_digests;  // path -> fnv1a64 hex
};

uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

std::string manifest_to_json(const RunManifest& manifest);

// Fills tool_version/digests and writes the JSON to manifest_path.
void write_manifest(RunManifest manifest, const std::vector<std::string>& input_paths,
                    const std::string& manifest_path);

}  // namespace clinfom
