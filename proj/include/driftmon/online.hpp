#pragma once

#include <optional>

#include "driftmon/offline.hpp"

namespace driftmon {

struct LabelWindowStat {
  std::optional<double> distance;  // empty = too few samples to characterize
  bool drift = false;
  std::int64_t count = 0;
};

struct WindowReport {
  std::int64_t window_id = 0;
  std::string timestamp;                 // empty when the stream has none
  std::optional<double> batch_distance;  // empty only for failed windows
  bool batch_drift = false;
  std::map<Label, LabelWindowStat> label_entries;
  std::vector<std::string> warnings;
};

struct MonitorLog {
  std::vector<WindowReport> reports;
  std::string baseline_id;
};

WindowReport analyze_window(const BaselineModel& baseline, const ThresholdSet& thresholds,
                            const EmbeddingBatch& window);

// One report per window, in order. A window that cannot be analyzed becomes a
// warning report; the stream never aborts.
MonitorLog run_stream(const BaselineModel& baseline, const ThresholdSet& thresholds,
                      const std::vector<EmbeddingBatch>& windows,
                      const std::vector<std::string>& timestamps = {},
                      const std::string& baseline_id = "");

// Writes curves.csv plus two standalone SVG charts (per-batch curve, per-label
// curves) with warning markers on flagged windows.
void render_monitor(const MonitorLog& log, const std::string& out_dir);

MonitorLog read_monitor_csv(const std::string& path);

}  // namespace driftmon
