#include "patchepi/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "patchepi/error.hpp"

namespace patchepi {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr int kTicks = 5;

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                               "#bcbd22", "#17becf"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  int compartment;  // 0 = S, 1 = I1, 2 = I2
  int patch;
};

double value(const State& s, int compartment, int patch) {
  switch (compartment) {
    case 0: return s.S[patch];
    case 1: return s.I1[patch];
    default: return s.I2[patch];
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string trajectory_csv(const Trajectory& traj) {
  if (traj.empty()) throw Error(ErrorCode::InvalidModel, "cannot write an empty trajectory");
  const int k = traj.states.front().patches();
  std::string out = "t";
  for (const char* block : {"S", "I1", "I2"}) {
    for (int j = 1; j <= k; ++j) out += std::string(",") + block + "_" + std::to_string(j);
  }
  out += ",mass_error\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += format_number(traj.times[i]);
    const State& s = traj.states[i];
    for (const Vector* v : {&s.S, &s.I1, &s.I2}) {
      for (int j = 0; j < k; ++j) out += "," + format_number((*v)[j]);
    }
    out += "," + format_number(traj.mass_error[i]) + "\n";
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::filesystem::path emit_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  const std::string body = trajectory_csv(traj);
  write_file(path, body);
  return path;
}

std::string trajectory_svg(const Trajectory& traj, const SeriesSelection& selection,
                           std::string_view title) {
  if (traj.empty()) throw Error(ErrorCode::InvalidModel, "cannot plot an empty trajectory");
  const int k = traj.states.front().patches();

  std::vector<Series> series;
  const std::array<bool, 3> wanted{selection.S, selection.I1, selection.I2};
  const std::array<const char*, 3> names{"S", "I1", "I2"};
  for (int c = 0; c < 3; ++c) {
    if (!wanted[c]) continue;
    for (int j = 0; j < k; ++j) {
      series.push_back({std::string(names[c]) + "_" + std::to_string(j + 1), c, j});
    }
  }

  const double t0 = traj.times.front();
  const double t1 = std::max(traj.times.back(), t0 + 1e-12);
  double ymax = 0.0;
  for (const State& s : traj.states) {
    for (const Series& se : series) ymax = std::max(ymax, value(s, se.compartment, se.patch));
  }
  if (!(ymax > 0.0)) ymax = 1.0;
  ymax *= 1.05;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto px = [&](double t) { return kLeft + (t - t0) / (t1 - t0) * plot_w; };
  const auto py = [&](double y) { return kTop + plot_h - y / ymax * plot_h; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"16\">" << escape_xml(title) << "</text>\n";
  }

  os << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
     << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop + plot_h) << "\" x2=\""
     << fixed(kLeft + plot_w) << "\" y2=\"" << fixed(kTop + plot_h) << "\"/>\n"
     << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop) << "\" x2=\"" << fixed(kLeft)
     << "\" y2=\"" << fixed(kTop + plot_h) << "\"/>\n"
     << "</g>\n";

  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= kTicks; ++i) {
    const double t = t0 + (t1 - t0) * i / kTicks;
    const double y = ymax * i / kTicks;
    os << "<text x=\"" << fixed(px(t)) << "\" y=\"" << fixed(kTop + plot_h + 16)
       << "\" text-anchor=\"middle\">" << escape_xml(format_number(t)) << "</text>\n";
    os << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(py(y) + 4)
       << "\" text-anchor=\"end\">" << escape_xml(format_number(y)) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 16)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">time t</text>\n";
  os << "<text x=\"18\" y=\"" << fixed(kTop + plot_h / 2) << "\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
     << fixed(kTop + plot_h / 2) << ")\">population</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Series& se = series[s];
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[s % kPalette.size()]
       << "\" stroke-width=\"1.5\" data-series=\"" << se.label << "\" points=\"";
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (i) os << ' ';
      os << fixed(px(traj.times[i])) << ',' << fixed(py(value(traj.states[i], se.compartment, se.patch)));
    }
    os << "\"/>\n";
  }

  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(s);
    const double x = kLeft + plot_w + 15;
    os << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(x + 25)
       << "\" y2=\"" << fixed(y) << "\" stroke=\"" << kPalette[s % kPalette.size()]
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << fixed(x + 32) << "\" y=\"" << fixed(y + 4) << "\">" << series[s].label
       << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::filesystem::path emit_plot_svg(const Trajectory& traj, const std::filesystem::path& path,
                                    const SeriesSelection& series, std::string_view title) {
  const std::string body = trajectory_svg(traj, series, title);
  write_file(path, body);
  return path;
}

}  // namespace patchepi
