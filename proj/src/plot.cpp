#include "fedprov/plot.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fedprov {

namespace {

constexpr double kWidth = 420.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;
constexpr double kPlot = kWidth - 2 * kMargin;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

double px(double v) { return kMargin + v * kPlot; }
double py(double v) { return kHeight - kMargin - v * kPlot; }

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

}  // namespace

std::string calibration_svg(const CalibrationCurve& curve, const std::string& title) {
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot
      << "\" height=\"" << kPlot << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double v = i / 10.0;
    svg << "<text x=\"" << num(px(v)) << "\" y=\"" << num(kHeight - kMargin + 16)
        << "\" font-size=\"10\" text-anchor=\"middle\">" << num(v) << "</text>\n";
    svg << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(py(v) + 3)
        << "\" font-size=\"10\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  svg << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(1))
      << "\" y2=\"" << num(py(1)) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";

  std::string points;
  for (const auto& bin : curve.bins) {
    if (bin.count == 0) continue;
    points += num(px(*bin.mean_pred)) + "," + num(py(*bin.obs_frac)) + " ";
  }
  if (!points.empty()) {
    points.pop_back();
    svg << "<polyline points=\"" << points
        << "\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    for (const auto& bin : curve.bins) {
      if (bin.count == 0) continue;
      svg << "<circle cx=\"" << num(px(*bin.mean_pred)) << "\" cy=\"" << num(py(*bin.obs_frac))
          << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
  }
  char ece[32];
  std::snprintf(ece, sizeof(ece), "%.4f", curve.ece);
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" font-size=\"13\" text-anchor=\"middle\">"
      << escape(title) << " (ECE " << ece << ")</text>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" font-size=\"11\" text-anchor=\"middle\">mean predicted probability</text>\n";
  svg << "<text x=\"14\" y=\"" << kHeight / 2 << "\" font-size=\"11\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 14 " << kHeight / 2 << ")\">observed positive fraction</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace fedprov
