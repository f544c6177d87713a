#include "driftmon/online.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "driftmon/io.hpp"

namespace driftmon {

namespace {

// Projection runs in the input's own precision; the gemm dominates window
// analysis, and the downstream Gaussian moments are taken in double anyway.
Matrix reduce(const PcaProjector& pca, const MatrixF& rows) {
  const MatrixF components_f = pca.components.cast<float>();
  Matrix projected = (rows * components_f.transpose()).cast<double>();
  projected.rowwise() -= (pca.components * pca.center).transpose();
  return projected;
}

}  // namespace

WindowReport analyze_window(const BaselineModel& baseline, const ThresholdSet& thresholds,
                            const EmbeddingBatch& window) {
  window.validate();
  if (window.dim() != baseline.batch_pca.in_dim())
    fail(ErrorKind::DimensionError, "window width " + std::to_string(window.dim()) +
                                        " does not match baseline width " +
                                        std::to_string(baseline.batch_pca.in_dim()));
  const Index d_prime = baseline.batch_pca.out_dim();
  if (window.rows() < d_prime + 1)
    fail(ErrorKind::RankError, "batch: window has " + std::to_string(window.rows()) +
                                   " rows, need d_prime+1 = " + std::to_string(d_prime + 1));

  WindowReport report;
  if (window.rows() < thresholds.m_w)
    report.warnings.push_back("short window: " + std::to_string(window.rows()) +
                              " rows, configured size is " + std::to_string(thresholds.m_w));
  else if (window.rows() > thresholds.m_w)
    report.warnings.push_back("window has " + std::to_string(window.rows()) +
                              " rows, exceeding the configured size " +
                              std::to_string(thresholds.m_w));

  const GaussianSummary window_gaussian =
      estimate_gaussian(reduce(baseline.batch_pca, window.vectors));
  report.batch_distance = distance(thresholds.metric, window_gaussian, baseline.batch_gaussian);
  report.batch_drift = *report.batch_distance > thresholds.t_batch;

  std::map<Label, std::vector<Index>> groups;
  std::set<Label> unknown;
  const bool labeled = window.has_labels();
  for (Index i = 0; labeled && i < window.rows(); ++i) {
    const Label label = window.labels[static_cast<std::size_t>(i)];
    if (baseline.label_pca.count(label))
      groups[label].push_back(i);
    else
      unknown.insert(label);
  }
  if (!labeled)
    report.warnings.push_back("window carries no predicted labels; per-label analysis skipped");
  if (!unknown.empty()) {
    std::string msg = "labels outside the baseline set ignored:";
    for (Label label : unknown) msg += " " + std::to_string(label);
    report.warnings.push_back(msg);
  }

  const Index d_l = baseline.config.d_prime_label;
  for (Label label : baseline.label_set) {
    LabelWindowStat stat;
    const auto it = groups.find(label);
    stat.count = it == groups.end() ? 0 : static_cast<std::int64_t>(it->second.size());
    if (stat.count >= d_l + 1) {
      const Index m_l = static_cast<Index>(it->second.size());
      MatrixF sub(m_l, window.dim());
      for (Index i = 0; i < m_l; ++i) sub.row(i) = window.vectors.row(it->second[i]);
      const GaussianSummary g = estimate_gaussian(reduce(baseline.label_pca.at(label), sub));
      const auto threshold = thresholds.t_label.find(label);
      if (threshold == thresholds.t_label.end())
        fail(ErrorKind::InvalidInput,
             "threshold set lacks label " + std::to_string(label) + " from the baseline");
      stat.distance = distance(thresholds.metric, g, baseline.label_gaussian.at(label));
      stat.drift = *stat.distance > threshold->second;
    }
    report.label_entries[label] = stat;
  }
  return report;
}

MonitorLog run_stream(const BaselineModel& baseline, const ThresholdSet& thresholds,
                      const std::vector<EmbeddingBatch>& windows,
                      const std::vector<std::string>& timestamps,
                      const std::string& baseline_id) {
  MonitorLog log;
  log.baseline_id = baseline_id;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    WindowReport report;
    try {
      report = analyze_window(baseline, thresholds, windows[i]);
    } catch (const Error& e) {
      report.warnings.push_back(std::string("window failed: ") + e.what());
    }
    report.window_id = static_cast<std::int64_t>(i);
    if (i < timestamps.size()) report.timestamp = timestamps[i];
    log.reports.push_back(std::move(report));
  }
  return log;
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<Label> collect_labels(const MonitorLog& log) {
  std::set<Label> labels;
  for (const auto& report : log.reports)
    for (const auto& [label, stat] : report.label_entries) labels.insert(label);
  return {labels.begin(), labels.end()};
}

std::string curve_csv(const MonitorLog& log, const std::vector<Label>& labels) {
  std::string out = "window_id,timestamp,batch_distance,batch_drift";
  for (Label label : labels) {
    out += ",label_" + std::to_string(label) + "_distance";
    out += ",label_" + std::to_string(label) + "_drift";
  }
  out += '\n';
  for (const auto& report : log.reports) {
    out += std::to_string(report.window_id);
    out += ',';
    out += csv_quote(report.timestamp);
    out += ',';
    if (report.batch_distance) out += format_double(*report.batch_distance);
    out += ',';
    out += report.batch_drift ? '1' : '0';
    for (Label label : labels) {
      const auto it = report.label_entries.find(label);
      out += ',';
      if (it != report.label_entries.end())
        out += it->second.distance ? format_double(*it->second.distance) : "insufficient";
      out += ',';
      out += (it != report.label_entries.end() && it->second.drift) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

struct ChartSeries {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;   // (window_id, distance)
  std::vector<std::pair<double, double>> markers;  // flagged windows
};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Hand-emitted standalone SVG: one panel, shared axes, triangle markers on
// flagged windows.
std::string chart_svg(const std::string& title, const std::vector<ChartSeries>& series) {
  const double width = 960, height = 320;
  const double ml = 64, mr = 24, mt = 36, mb = 44;
  const double plot_w = width - ml - mr, plot_h = height - mt - mb;

  double x_min = 0, x_max = 1, y_max = 0;
  bool any = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!any) {
        x_min = x_max = x;
        any = true;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  if (x_max <= x_min) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max <= 0) y_max = 1.0;
  y_max *= 1.08;

  const auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto sy = [&](double y) { return mt + plot_h - y / y_max * plot_h; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(width) +
                    "\" height=\"" + fmt2(height) + "\" viewBox=\"0 0 " + fmt2(width) + " " +
                    fmt2(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt2(ml) + "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" "
         "font-weight=\"bold\" fill=\"#333\">" + title + "</text>\n";

  for (int tick = 0; tick <= 4; ++tick) {
    const double y_value = y_max * tick / 4.0;
    const double y = sy(y_value);
    svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(y) + "\" x2=\"" + fmt2(width - mr) +
           "\" y2=\"" + fmt2(y) + "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt2(ml - 8) + "\" y=\"" + fmt2(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" fill=\"#555\">" +
           fmt_tick(y_value) + "</text>\n";
  }
  const double x_span = x_max - x_min;
  const double x_step = std::max(1.0, std::floor(x_span / 8.0));
  for (double x_value = std::ceil(x_min); x_value <= x_max; x_value += x_step) {
    const double x = sx(x_value);
    svg += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(height - mb + 18) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" fill=\"#555\">" +
           fmt_tick(x_value) + "</text>\n";
  }
  svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(mt + plot_h) + "\" x2=\"" +
         fmt2(width - mr) + "\" y2=\"" + fmt2(mt + plot_h) + "\" stroke=\"#333\"/>\n";
  svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(mt) + "\" x2=\"" + fmt2(ml) + "\" y2=\"" +
         fmt2(mt + plot_h) + "\" stroke=\"#333\"/>\n";
  svg += "<text x=\"" + fmt2(ml + plot_w / 2) + "\" y=\"" + fmt2(height - 8) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "fill=\"#333\">window</text>\n";

  double legend_x = ml + 8;
  for (const auto& s : series) {
    std::string path;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      path += (i == 0 ? "M" : "L");
      path += fmt2(sx(s.points[i].first)) + " " + fmt2(sy(s.points[i].second));
    }
    if (!path.empty())
      svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + s.color +
             "\" stroke-width=\"1.6\"/>\n";
    for (const auto& [mx, my] : s.markers) {
      svg += "<path class=\"warning-marker\" d=\"M" + fmt2(sx(mx)) + " " + fmt2(sy(my) - 9) +
             " l-5 9 h10 z\" fill=\"#d62728\"/>\n";
    }
    if (series.size() > 1) {
      svg += "<rect x=\"" + fmt2(legend_x) + "\" y=\"" + fmt2(mt + 4) +
             "\" width=\"12\" height=\"4\" fill=\"" + s.color + "\"/>\n";
      svg += "<text x=\"" + fmt2(legend_x + 16) + "\" y=\"" + fmt2(mt + 10) +
             "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">" + s.name +
             "</text>\n";
      legend_x += 16.0 + 8.0 * static_cast<double>(s.name.size()) + 14.0;
    }
  }
  svg += "</svg>\n";
  return svg;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#bcbd22"};

}  // namespace

void render_monitor(const MonitorLog& log, const std::string& out_dir) {
  if (log.reports.empty()) fail(ErrorKind::NothingToRender, "monitor log is empty");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  const std::vector<Label> labels = collect_labels(log);
  atomic_write_file((fs::path(out_dir) / "curves.csv").string(), curve_csv(log, labels));

  ChartSeries batch;
  batch.name = "batch";
  batch.color = kPalette[0];
  for (const auto& report : log.reports) {
    if (!report.batch_distance) continue;
    batch.points.emplace_back(static_cast<double>(report.window_id), *report.batch_distance);
    if (report.batch_drift)
      batch.markers.emplace_back(static_cast<double>(report.window_id), *report.batch_distance);
  }
  atomic_write_file((fs::path(out_dir) / "batch_chart.svg").string(),
                    chart_svg("per-batch distance", {batch}));

  std::vector<ChartSeries> per_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ChartSeries s;
    s.name = "label " + std::to_string(labels[i]);
    s.color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    for (const auto& report : log.reports) {
      const auto it = report.label_entries.find(labels[i]);
      if (it == report.label_entries.end() || !it->second.distance) continue;
      s.points.emplace_back(static_cast<double>(report.window_id), *it->second.distance);
      if (it->second.drift)
        s.markers.emplace_back(static_cast<double>(report.window_id), *it->second.distance);
    }
    per_label.push_back(std::move(s));
  }
  atomic_write_file((fs::path(out_dir) / "labels_chart.svg").string(),
                    chart_svg("per-label distance", per_label));
}

MonitorLog read_monitor_csv(const std::string& path) {
  const auto records = parse_csv(read_file(path));
  if (records.empty()) fail(ErrorKind::FormatError, path + ": empty curve file");
  const auto& header = records.front();
  if (header.size() < 4 || header[0] != "window_id" || header[1] != "timestamp" ||
      header[2] != "batch_distance" || header[3] != "batch_drift")
    fail(ErrorKind::FormatError, path + ": unexpected curve header");
  if ((header.size() - 4) % 2 != 0)
    fail(ErrorKind::FormatError, path + ": dangling label column");
  std::vector<Label> labels;
  for (std::size_t j = 4; j + 1 < header.size(); j += 2) {
    const std::string& name = header[j];
    if (name.rfind("label_", 0) != 0 || name.find("_distance") == std::string::npos)
      fail(ErrorKind::FormatError, path + ": unexpected column '" + name + "'");
    labels.push_back(static_cast<Label>(std::stoul(name.substr(6))));
  }

  MonitorLog log;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& row = records[i];
    if (row.size() != header.size())
      fail(ErrorKind::FormatError, path + ": row " + std::to_string(i) + " field count mismatch");
    WindowReport report;
    report.window_id = std::stoll(row[0]);
    report.timestamp = row[1];
    if (!row[2].empty()) {
      double v = 0;
      std::from_chars(row[2].data(), row[2].data() + row[2].size(), v);
      report.batch_distance = v;
    }
    report.batch_drift = row[3] == "1";
    for (std::size_t k = 0; k < labels.size(); ++k) {
      LabelWindowStat stat;
      const std::string& cell = row[4 + 2 * k];
      if (!cell.empty() && cell != "insufficient") {
        double v = 0;
        std::from_chars(cell.data(), cell.data() + cell.size(), v);
        stat.distance = v;
      }
      stat.drift = row[5 + 2 * k] == "1";
      if (!cell.empty()) report.label_entries[labels[k]] = stat;
    }
    log.reports.push_back(std::move(report));
  }
  return log;
}

}  // namespace driftmon
