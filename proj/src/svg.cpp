#include "svg.hpp"

#include <fmt/format.h>

namespace penmin::svg {

namespace {
constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
}  // namespace

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

Plot::Plot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void Plot::set_x_range(double lo, double hi) {
  x_lo_ = lo;
  x_hi_ = hi > lo ? hi : lo + 1.0;
}

void Plot::set_y_range(double lo, double hi) {
  y_lo_ = lo;
  y_hi_ = hi > lo ? hi : lo + 1.0;
}

double Plot::px(double x) const { return kLeft + (x - x_lo_) / (x_hi_ - x_lo_) * (kWidth - kLeft - kRight); }
double Plot::py(double y) const { return kHeight - kBottom - (y - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom); }

void Plot::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
  std::string d;
  for (const auto& [x, y] : pts) d += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
  body_.push_back(fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>)", color, d));
}

void Plot::points(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
  for (const auto& [x, y] : pts) {
    body_.push_back(fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="{}"/>)", px(x), py(y), color));
  }
}

void Plot::bar(double x0, double x1, double height, const std::string& color) {
  const double top = py(height);
  body_.push_back(fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="{}"/>)", px(x0), top,
                              std::max(px(x1) - px(x0) - 1.0, 0.5), py(y_lo_) - top, color));
}

void Plot::vline(double x, const std::string& color, const std::string& label) {
  body_.push_back(fmt::format(R"(<line x1="{0:.2f}" y1="{1:.2f}" x2="{0:.2f}" y2="{2:.2f}" stroke="{3}" stroke-dasharray="4 3"/>)",
                              px(x), py(y_lo_), py(y_hi_), color));
  body_.push_back(fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="11" fill="{}">{}</text>)", px(x) + 3,
                              kTop + 12, color, escape(label)));
}

std::string Plot::render() const {
  std::string s = fmt::format(
      R"(<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">
<rect width="100%" height="100%" fill="white"/>
<text x="{2}" y="24" font-size="15" font-family="sans-serif">{3}</text>
)",
      kWidth, kHeight, kLeft, escape(title_));
  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;
  s += fmt::format(R"(<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>)"
                   "\n"
                   R"(<line x1="{0}" y1="{1}" x2="{0}" y2="{3}" stroke="black"/>)"
                   "\n",
                   x0, y0, x1, y1);
  for (int t = 0; t <= 4; ++t) {
    const double fx = x_lo_ + (x_hi_ - x_lo_) * t / 4.0;
    const double fy = y_lo_ + (y_hi_ - y_lo_) * t / 4.0;
    s += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="10" text-anchor="middle">{:.3g}</text>)"
                     "\n",
                     px(fx), y0 + 14, fx);
    s += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="10" text-anchor="end">{:.3g}</text>)"
                     "\n",
                     x0 - 4, py(fy) + 3, fy);
  }
  s += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="12" text-anchor="middle">{}</text>)"
                   "\n",
                   (x0 + x1) / 2, kHeight - 12, escape(x_label_));
  s += fmt::format(R"svg(<text x="14" y="{:.2f}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2f})">{}</text>)svg"
                   "\n",
                   (y0 + y1) / 2, (y0 + y1) / 2, escape(y_label_));
  for (const auto& b : body_) s += b + "\n";
  s += "</svg>\n";
  return s;
}

}  // namespace penmin::svg
