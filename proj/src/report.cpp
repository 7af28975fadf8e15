// Copyright 2026 The mcattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mcattn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mcattn/errors.hpp"

namespace mcattn {
namespace {

constexpr char kCsvHeader[] =
    "kind,method,samples,queries,keys,dim,seed,trial,status,mse,mse_stderr,"
    "bias_norm,variance_trace,wall_time_s,peak_alloc_bytes";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

nlohmann::json record_to_json(const ReportRecord& r) {
  return nlohmann::json{{"kind", r.kind},
                        {"method", r.method},
                        {"samples", r.samples},
                        {"queries", r.queries},
                        {"keys", r.keys},
                        {"dim", r.dim},
                        {"seed", r.seed},
                        {"trial", r.trial},
                        {"status", r.status},
                        {"mse", r.mse},
                        {"mse_stderr", r.mse_stderr},
                        {"bias_norm", r.bias_norm},
                        {"variance_trace", r.variance_trace},
                        {"wall_time_s", r.wall_time_s},
                        {"peak_alloc_bytes", r.peak_alloc_bytes}};
}

// ---------------------------------------------------------------------------
// Minimal SVG line charts.

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, std::vector<Series> series,
                           bool log_x, bool log_y) {
  constexpr double kWidth = 720, kHeight = 480;
  constexpr double kLeft = 80, kRight = 180, kTop = 50, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  // Drop points a log axis cannot place.
  for (auto& s : series) {
    std::erase_if(s.points, [&](const auto& p) {
      return (log_x && p.first <= 0.0) || (log_y && p.second <= 0.0);
    });
    std::sort(s.points.begin(), s.points.end());
  }
  std::erase_if(series, [](const Series& s) { return s.points.empty(); });

  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  const bool empty = series.empty();
  if (empty) {
    x_min = y_min = log_x || log_y ? 1.0 : 0.0;
    x_max = y_max = 10.0;
  }
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  double tx_min = tx(x_min), tx_max = tx(x_max);
  double ty_min = ty(y_min), ty_max = ty(y_max);
  if (tx_max - tx_min < 1e-12) { tx_min -= 0.5; tx_max += 0.5; }
  if (ty_max - ty_min < 1e-12) { ty_min -= 0.5; ty_max += 0.5; }
  // A little headroom.
  const double x_pad = 0.04 * (tx_max - tx_min);
  const double y_pad = 0.06 * (ty_max - ty_min);
  tx_min -= x_pad; tx_max += x_pad;
  ty_min -= y_pad; ty_max += y_pad;

  auto px = [&](double v) { return kLeft + (tx(v) - tx_min) / (tx_max - tx_min) * plot_w; };
  auto py = [&](double v) {
    return kTop + plot_h - (ty(v) - ty_min) / (ty_max - ty_min) * plot_h;
  };

  auto ticks = [](double lo, double hi, bool log_axis) {
    std::vector<double> out;
    if (log_axis) {
      for (int e = static_cast<int>(std::floor(lo)); e <= static_cast<int>(std::ceil(hi));
           ++e) {
        const double v = std::pow(10.0, e);
        if (std::log10(v) >= lo - 1e-9 && std::log10(v) <= hi + 1e-9) out.push_back(v);
      }
      if (out.size() < 2) {
        out.clear();
        for (int i = 0; i <= 4; ++i) {
          out.push_back(std::pow(10.0, lo + (hi - lo) * i / 4.0));
        }
      }
    } else {
      const double step = (hi - lo) / 5.0;
      for (int i = 0; i <= 5; ++i) out.push_back(lo + step * i);
    }
    return out;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  for (double v : ticks(tx_min, tx_max, log_x)) {
    const double x = log_x ? px(v) : kLeft + (v - tx_min) / (tx_max - tx_min) * plot_w;
    svg << "<line x1=\"" << fmt_coord(x) << "\" y1=\"" << kTop + plot_h << "\" x2=\""
        << fmt_coord(x) << "\" y2=\"" << kTop + plot_h + 5
        << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << fmt_coord(x) << "\" y=\"" << kTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(v) << "</text>\n";
  }
  for (double v : ticks(ty_min, ty_max, log_y)) {
    const double y = log_y ? py(v) : kTop + plot_h - (v - ty_min) / (ty_max - ty_min) * plot_h;
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
        << kLeft << "\" y2=\"" << fmt_coord(y) << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << kLeft - 9 << "\" y=\"" << fmt_coord(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(v) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << x_label << "</text>\n";
  svg << "<text x=\"20\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 20 "
      << kTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points) {
      svg << fmt_coord(px(x)) << "," << fmt_coord(py(y)) << " ";
    }
    svg << "\"/>\n";
    for (const auto& [x, y] : series[i].points) {
      svg << "<circle cx=\"" << fmt_coord(px(x)) << "\" cy=\"" << fmt_coord(py(y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 16 + 18 * static_cast<double>(i);
    svg << "<line x1=\"" << kLeft + plot_w + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << kLeft + plot_w + 34 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w + 40 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[i].name
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<Series> collect_series(const ExperimentReport& report,
                                   const std::string& kind, bool x_is_samples) {
  std::map<std::string, Series> by_method;
  for (const auto& r : report.records) {
    if (r.kind != kind || r.status != "ok") continue;
    Series& s = by_method[r.method];
    s.name = r.method;
    const double x =
        static_cast<double>(x_is_samples ? r.samples : r.queries);
    const double y = x_is_samples ? r.mse : r.wall_time_s;
    s.points.emplace_back(x, y);
  }
  std::vector<Series> out;
  out.reserve(by_method.size());
  for (auto& [_, s] : by_method) out.push_back(std::move(s));
  return out;
}

}  // namespace

std::string artifact_version_string() { return "mcattn 0.1.0"; }

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << kCsvHeader << "\n";
  for (const auto& r : report.records) {
    out << csv_escape(r.kind) << ',' << csv_escape(r.method) << ',' << r.samples
        << ',' << r.queries << ',' << r.keys << ',' << r.dim << ',' << r.seed << ','
        << r.trial << ',' << csv_escape(r.status) << ',' << fmt_double(r.mse) << ','
        << fmt_double(r.mse_stderr) << ',' << fmt_double(r.bias_norm) << ','
        << fmt_double(r.variance_trace) << ',' << fmt_double(r.wall_time_s) << ','
        << r.peak_alloc_bytes << "\n";
  }
}

std::vector<ReportRecord> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw IoError("report CSV: missing or unexpected header");
  }
  std::vector<ReportRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 15) {
      throw IoError("report CSV: expected 15 fields, got " +
                    std::to_string(fields.size()));
    }
    ReportRecord r;
    r.kind = fields[0];
    r.method = fields[1];
    r.samples = std::stoull(fields[2]);
    r.queries = std::stoull(fields[3]);
    r.keys = std::stoull(fields[4]);
    r.dim = std::stoull(fields[5]);
    r.seed = std::stoull(fields[6]);
    r.trial = std::stoll(fields[7]);
    r.status = fields[8];
    r.mse = std::strtod(fields[9].c_str(), nullptr);
    r.mse_stderr = std::strtod(fields[10].c_str(), nullptr);
    r.bias_norm = std::strtod(fields[11].c_str(), nullptr);
    r.variance_trace = std::strtod(fields[12].c_str(), nullptr);
    r.wall_time_s = std::strtod(fields[13].c_str(), nullptr);
    r.peak_alloc_bytes = std::stoull(fields[14]);
    records.push_back(std::move(r));
  }
  return records;
}

void write_report_json(std::ostream& out, const ExperimentReport& report) {
  nlohmann::json doc;
  doc["artifact"] = report.artifact_version;
  if (report.timestamp_unix != 0) {
    doc["timestamp_unix"] = report.timestamp_unix;
  } else {
    doc["timestamp_unix"] = nullptr;
  }
  doc["config"] = report.config;
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) records.push_back(record_to_json(r));
  doc["records"] = std::move(records);
  out << doc.dump(2) << "\n";
}

std::string render_mse_chart_svg(const ExperimentReport& report) {
  return svg_line_chart("Approximation error", "samples", "MSE",
                        collect_series(report, "aggregate", true), true, true);
}

std::string render_scaling_chart_svg(const ExperimentReport& report) {
  return svg_line_chart("Wall time scaling", "sequence length N", "median time (s)",
                        collect_series(report, "bench", false), true, true);
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "svg") return ReportFormat::Svg;
  throw std::invalid_argument("unknown report format: " + name);
}

namespace {

std::string write_text_file(const std::string& out_dir, const std::string& name,
                            const std::string& contents) {
  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = (dir / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << contents;
  if (!out) throw IoError("write failed: " + path);
  return path;
}

}  // namespace

std::vector<std::string> emit_report(const ExperimentReport& report,
                                     const std::vector<ReportFormat>& formats,
                                     const std::string& out_dir,
                                     const std::string& basename) {
  std::vector<std::string> paths;
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::Csv: {
        std::ostringstream csv;
        write_report_csv(csv, report);
        paths.push_back(write_text_file(out_dir, basename + ".csv", csv.str()));
        break;
      }
      case ReportFormat::Json: {
        std::ostringstream json;
        write_report_json(json, report);
        paths.push_back(write_text_file(out_dir, basename + ".json", json.str()));
        break;
      }
      case ReportFormat::Svg: {
        if (report.chart == ChartKind::None) break;
        const std::string svg = report.chart == ChartKind::MseVersusSamples
                                    ? render_mse_chart_svg(report)
                                    : render_scaling_chart_svg(report);
        paths.push_back(write_text_file(out_dir, basename + ".svg", svg));
        break;
      }
    }
  }
  return paths;
}

void write_zreport_csv(std::ostream& out, const ZReport& report) {
  out << "method,trials,query,dim,oracle,grand_mean,standard_error,z\n";
  for (const auto& r : report.records) {
    out << csv_escape(report.method) << ',' << report.trials << ',' << r.query << ','
        << r.dim << ',' << fmt_double(r.oracle) << ',' << fmt_double(r.grand_mean)
        << ',' << fmt_double(r.standard_error) << ',' << fmt_double(r.z) << "\n";
  }
}

void write_zreport_json(std::ostream& out, const ZReport& report) {
  nlohmann::json doc;
  doc["artifact"] = report.artifact_version;
  doc["config"] = report.config;
  doc["method"] = report.method;
  doc["trials"] = report.trials;
  doc["fraction_within_4"] = report.fraction_within_4;
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    records.push_back(nlohmann::json{{"query", r.query},
                                     {"dim", r.dim},
                                     {"oracle", r.oracle},
                                     {"grand_mean", r.grand_mean},
                                     {"standard_error", r.standard_error},
                                     {"z", r.z}});
  }
  doc["records"] = std::move(records);
  out << doc.dump(2) << "\n";
}

std::vector<std::string> emit_zreport(const ZReport& report,
                                      const std::vector<ReportFormat>& formats,
                                      const std::string& out_dir,
                                      const std::string& basename) {
  std::vector<std::string> paths;
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::Csv: {
        std::ostringstream csv;
        write_zreport_csv(csv, report);
        paths.push_back(write_text_file(out_dir, basename + ".csv", csv.str()));
        break;
      }
      case ReportFormat::Json: {
        std::ostringstream json;
        write_zreport_json(json, report);
        paths.push_back(write_text_file(out_dir, basename + ".json", json.str()));
        break;
      }
      case ReportFormat::Svg:
        break;  // no chart defined for z-score reports
    }
  }
  return paths;
}

}  // namespace mcattn
