#include "clinfom/svg.hpp"

#include <cmath>
#include <cstdio>

namespace clinfom {

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

void SvgCanvas::set_viewport(double px0, double py0, double px1, double py1, double data_x_min,
                             double data_x_max, double data_y_min, double data_y_max) {
  px0_ = px0;
  py0_ = py0;
  px1_ = px1;
  py1_ = py1;
  dx_min_ = data_x_min;
  dx_max_ = data_x_max > data_x_min ? data_x_max : data_x_min + 1.0;
  dy_min_ = data_y_min;
  dy_max_ = data_y_max > data_y_min ? data_y_max : data_y_min + 1.0;
}

double SvgCanvas::to_px_x(double x) const {
  return px0_ + (x - dx_min_) / (dx_max_ - dx_min_) * (px1_ - px0_);
}

double SvgCanvas::to_px_y(double y) const {
  return py1_ - (y - dy_min_) / (dy_max_ - dy_min_) * (py1_ - py0_);
}

std::string SvgCanvas::num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string SvgCanvas::escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void SvgCanvas::frame() {
  body_ += "<rect x=\"" + num(px0_) + "\" y=\"" + num(py0_) + "\" width=\"" + num(px1_ - px0_) +
           "\" height=\"" + num(py1_ - py0_) +
           "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  char label[64];
  std::snprintf(label, sizeof label, "%.3g", dx_min_);
  text(px0_, py1_ + 14, label, 10, "start");
  std::snprintf(label, sizeof label, "%.3g", dx_max_);
  text(px1_, py1_ + 14, label, 10, "end");
  std::snprintf(label, sizeof label, "%.3g", dy_min_);
  text(px0_ - 4, py1_, label, 10, "end");
  std::snprintf(label, sizeof label, "%.3g", dy_max_);
  text(px0_ - 4, py0_ + 8, label, 10, "end");
}

void SvgCanvas::polyline(std::span<const double> xs, std::span<const double> ys,
                         const std::string& color, double stroke_width) {
  body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           num(stroke_width) + "\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) body_ += " ";
    body_ += num(to_px_x(xs[i])) + "," + num(to_px_y(ys[i]));
  }
  body_ += "\"/>\n";
}

void SvgCanvas::circle(double x, double y, double radius_px, const std::string& color) {
  body_ += "<circle cx=\"" + num(to_px_x(x)) + "\" cy=\"" + num(to_px_y(y)) + "\" r=\"" +
           num(radius_px) + "\" fill=\"" + color + "\"/>\n";
}

void SvgCanvas::vbar(double x_center, double y_value, double width_px, const std::string& color,
                     double opacity) {
  const double top = to_px_y(y_value);
  const double base = to_px_y(dy_min_);
  body_ += "<rect x=\"" + num(to_px_x(x_center) - width_px / 2) + "\" y=\"" + num(top) +
           "\" width=\"" + num(width_px) + "\" height=\"" + num(base - top) + "\" fill=\"" +
           color + "\" fill-opacity=\"" + num(opacity) + "\"/>\n";
}

void SvgCanvas::text(double px, double py, const std::string& content, int size_px,
                     const std::string& anchor) {
  body_ += "<text x=\"" + num(px) + "\" y=\"" + num(py) + "\" font-size=\"" +
           std::to_string(size_px) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
           "\">" + escape(content) + "</text>\n";
}

void SvgCanvas::title(const std::string& content) { text(width_ / 2, 16, content, 13, "middle"); }

std::string SvgCanvas::finish() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "width=\"" +
         num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " +
         num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ +
         "</svg>\n";
}

}  // namespace clinfom
