#include "betacantor/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <ostream>

namespace betacantor {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void header(std::ostream& out, double w, double h, const SvgOptions& o) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (o.timestamp) {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    out << "<!-- generated " << buf << " -->\n";
  }
  if (!o.config_hash.empty()) out << "<!-- config " << o.config_hash << " -->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << " " << num(h) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty())
    out << "<text x=\"" << num(w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << escape(o.title) << "</text>\n";
}

}  // namespace

void write_generations_svg(std::ostream& out, const std::vector<std::vector<WeightedSegment>>& gens,
                           const SvgOptions& o) {
  const double width = 900, margin = 40, panel = 90;
  double height = 40 + panel * std::max<std::size_t>(gens.size(), 1) + 10;
  header(out, width, height, o);
  for (std::size_t g = 0; g < gens.size(); ++g) {
    double top = 40 + panel * g;
    double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
    for (const auto& s : gens[g]) {
      ylo = std::min(ylo, to_double(s.y()));
      yhi = std::max(yhi, to_double(s.y()));
    }
    const char* color = kPalette[g % (sizeof kPalette / sizeof *kPalette)];
    out << "<text x=\"5\" y=\"" << num(top + panel / 2) << "\" font-family=\"sans-serif\" font-size=\"12\">E"
        << g << "</text>\n";
    out << "<g stroke=\"" << color << "\" stroke-width=\"3\">\n";
    for (const auto& s : gens[g]) {
      double y = to_double(s.y());
      double t = yhi > ylo ? (y - ylo) / (yhi - ylo) : 0.5;
      double py = top + panel - 20 - t * (panel - 40);
      double x0 = margin + (width - 2 * margin) * to_double(s.left.x);
      double x1 = margin + (width - 2 * margin) * to_double(s.right.x);
      if (x1 - x0 < 0.2) x1 = x0 + 0.2;
      out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(py) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(py)
          << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

void write_curves_svg(std::ostream& out, const std::vector<Curve>& curves, const std::string& x_label,
                      const std::string& y_label, bool log_y, const SvgOptions& o) {
  const double width = 800, height = 500, left = 70, right = 170, top = 40, bottom = 50;
  auto fy = [&](double v) { return log_y ? std::log10(v) : v; };
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& c : curves)
    for (auto [x, y] : c.points) {
      if (!(x > 0) || !std::isfinite(y) || (log_y && !(y > 0))) continue;
      xlo = std::min(xlo, std::log10(x));
      xhi = std::max(xhi, std::log10(x));
      ylo = std::min(ylo, fy(y));
      yhi = std::max(yhi, fy(y));
    }
  if (!(xhi > xlo)) xlo = xhi - 1;
  if (!(yhi > ylo)) ylo = yhi - 1;
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1;
  if (!std::isfinite(ylo)) ylo = 0, yhi = 1;
  double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + pw * (std::log10(x) - xlo) / (xhi - xlo); };
  auto py = [&](double y) { return top + ph * (1 - (fy(y) - ylo) / (yhi - ylo)); };
  header(out, width, height, o);
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label)
      << " (log10 " << num(xlo) << " to " << num(xhi) << ")</text>\n";
  out << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 14 " << num(top + ph / 2) << ")\" text-anchor=\"middle\">" << escape(y_label)
      << (log_y ? " (log10)" : "") << "</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof *kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (auto [x, y] : curves[i].points) {
      if (!(x > 0) || !std::isfinite(y) || (log_y && !(y > 0))) continue;
      out << (first ? "" : " ") << num(px(x)) << "," << num(py(y));
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << num(width - right + 10) << "\" y=\"" << num(top + 16 * (i + 1))
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">" << escape(curves[i].label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace betacantor
