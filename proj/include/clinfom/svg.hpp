#pragma once

#include <span>
#include <string>
#include <vector>

namespace clinfom {

// Minimal static SVG emitter for the report plots. Output is deterministic:
// fixed coordinate formatting, no timestamps.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height);

  // Maps data coordinates onto a pixel viewport [x0,x1]x[y0,y1] (y flipped).
  void set_viewport(double px0, double py0, double px1, double py1, double data_x_min,
                    double data_x_max, double data_y_min, double data_y_max);

  void frame();  // border + min/max tick labels of the current viewport
  void polyline(std::span<const double> xs, std::span<const double> ys,
                const std::string& color, double stroke_width = 1.5);
  void circle(double x, double y, double radius_px, const std::string& color);
  void vbar(double x_center, double y_value, double width_px, const std::string& color,
            double opacity = 1.0);
  void text(double px, double py, const std::string& content, int size_px = 11,
            const std::string& anchor = "start");
  void title(const std::string& content);

  std::string finish() const;

 private:
  double to_px_x(double x) const;
  double to_px_y(double y) const;
  static std::string escape(const std::string& text);
  static std::string num(double v);

  double width_, height_;
  double px0_ = 0, py0_ = 0, px1_ = 0, py1_ = 0;
  double dx_min_ = 0, dx_max_ = 1, dy_min_ = 0, dy_max_ = 1;
  std::string body_;
};

}  // namespace clinfom
