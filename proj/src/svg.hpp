#pragma once

#include <string>
#include <utility>
#include <vector>

namespace penmin::svg {

// Minimal fixed-size line/scatter/bar chart writer.
class Plot {
 public:
  Plot(std::string title, std::string x_label, std::string y_label);

  void set_x_range(double lo, double hi);
  void set_y_range(double lo, double hi);

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color);
  void points(const std::vector<std::pair<double, double>>& pts, const std::string& color);
  void bar(double x0, double x1, double height, const std::string& color);
  void vline(double x, const std::string& color, const std::string& label);

  std::string render() const;

 private:
  double px(double x) const;
  double py(double y) const;

  std::string title_;
  std::string x_label_;
  std::string y_label_;
  double x_lo_ = 0.0, x_hi_ = 1.0, y_lo_ = 0.0, y_hi_ = 1.0;
  std::vector<std::string> body_;
};

std::string escape(const std::string& s);

}  // namespace penmin::svg
