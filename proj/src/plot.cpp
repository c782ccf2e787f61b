#include "vrag/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "vrag/errors.hpp"

namespace vrag {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::ofstream open_svg(const std::filesystem::path& path, const std::string& title) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  return out;
}

void axes(std::ofstream& out, double y0, double y1) {
  const double x_axis = kHeight - kBottom;
  out << "<line x1=\"" << kLeft << "\" y1=\"" << x_axis << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << x_axis
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << x_axis
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y0 + (y1 - y0) * i / 4.0;
    const double y = x_axis - (x_axis - kTop) * i / 4.0;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
}

}  // namespace

void write_line_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                    const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  auto out = open_svg(path, title);
  axes(out, y0, y1);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 30 << "\" text-anchor=\"middle\">" << fmt(x0)
      << "</text>\n<text x=\"" << kWidth - kRight << "\" y=\"" << kHeight - 30 << "\" text-anchor=\"middle\">"
      << fmt(x1) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      out << fmt(kLeft + (s.x[i] - x0) / (x1 - x0) * pw) << ',' << fmt(kTop + ph - (s.y[i] - y0) / (y1 - y0) * ph)
          << ' ';
    }
    out << "\"/>\n<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << kTop + 14 * (k + 1)
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_bar_svg(const std::filesystem::path& path, const std::string& title,
                   const std::vector<std::string>& labels, const std::vector<double>& values) {
  if (labels.size() != values.size()) throw Error(ErrorCode::ShapeMismatch, "one label per bar");
  double y1 = 0.0;
  for (double v : values) y1 = std::max(y1, std::isfinite(v) ? v : 0.0);
  if (y1 == 0.0) y1 = 1.0;
  auto out = open_svg(path, title);
  axes(out, 0.0, y1);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const double slot = values.empty() ? pw : pw / double(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::isfinite(values[i]) ? values[i] : 0.0;
    const double h = v / y1 * ph;
    const double x = kLeft + slot * double(i) + slot * 0.15;
    out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + ph - h) << "\" width=\"" << fmt(slot * 0.7)
        << "\" height=\"" << fmt(h) << "\" fill=\"" << kColors[0] << "\"/>\n"
        << "<text x=\"" << fmt(x + slot * 0.35) << "\" y=\"" << kHeight - kBottom + 14
        << "\" text-anchor=\"middle\">" << escape(labels[i]) << "</text>\n"
        << "<text x=\"" << fmt(x + slot * 0.35) << "\" y=\"" << fmt(kTop + ph - h - 4)
        << "\" text-anchor=\"middle\">" << fmt(v) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace vrag
