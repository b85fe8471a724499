#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgmon/metrics.hpp"

namespace kgmon {

struct AnomalyWeights {
  double icr = 1.0 / 3.0;
  double ipr = 1.0 / 3.0;
  double ci = 1.0 / 3.0;
  std::optional<double> hal;

  /// Scales present weights to sum to 1. Throws on negative weights or an
  /// all-zero set.
  AnomalyWeights normalized() const;
};

/// Weighted sum of the deltas that carry a weight. Throws when a weight is
/// set for an absent delta (hal).
double anomaly_score(const MetricDelta& delta, const AnomalyWeights& weights);

struct ThresholdState {
  std::deque<double> window;
  std::size_t capacity = 30;
  double lambda = 2.0;
  std::size_t warmup_min = 5;

  void push(double score);
};

/// mean + lambda * sample stddev of the window; absent during warmup.
std::optional<double> update_threshold(const ThresholdState& state);

struct MonitorConfig {
  AnomalyWeights weights;
  double lambda = 2.0;
  std::size_t window = 30;
  std::size_t warmup_min = 5;
};

struct AnomalyRecord {
  std::int64_t timestamp = 0;
  std::string model;
  std::string batch_id;
  MetricVector metrics;
  MetricVector baseline_metrics;
  MetricDelta delta;
  double score = 0.0;
  std::optional<double> threshold;
  bool flagged = false;
  std::size_t hall_total = 0;
  std::size_t hall_failed = 0;

  bool operator==(const AnomalyRecord&) const = default;
};

struct Alert {
  std::int64_t timestamp = 0;
  std::string model;
  double score = 0.0;
  double threshold = 0.0;
  std::string top_metric;
};

struct Observation {
  std::int64_t timestamp = 0;
  std::string model;
  std::string batch_id;
  MetricVector metrics;
  MetricVector baseline_metrics;
  std::size_t hall_total = 0;
  std::size_t hall_failed = 0;
};

struct ObserveResult {
  AnomalyRecord record;
  std::optional<Alert> alert;
};

/// Rolling-threshold detector for one model. Each observation is scored
/// against the threshold of the scores before it, then joins the window.
class ModelMonitor {
 public:
  ModelMonitor(MonitorConfig config, std::string model);

  /// Throws when timestamps do not strictly increase.
  ObserveResult observe(const Observation& obs);

  /// As observe, with the delta supplied instead of derived from the two
  /// metric vectors (used for synthetic delta noise).
  ObserveResult observe_delta(const Observation& obs, const MetricDelta& delta);

  /// Replays a persisted score into the window without re-scoring.
  void restore(std::int64_t timestamp, double score);

  const ThresholdState& state() const noexcept { return state_; }
  const std::string& model() const noexcept { return model_; }
  std::optional<std::int64_t> last_timestamp() const noexcept { return last_timestamp_; }

 private:
  MonitorConfig config_;
  AnomalyWeights weights_;
  std::string model_;
  ThresholdState state_;
  std::optional<std::int64_t> last_timestamp_;
};

/// Name of the largest weighted delta term (icr, ipr, ci, hal).
std::string top_contributor(const MetricDelta& delta, const AnomalyWeights& weights);

// ---- drift -------------------------------------------------------------

enum class DriftMetric { kIcr, kIpr, kCi, kHal };

DriftMetric parse_drift_metric(std::string_view name);

struct DriftSeries {
  std::vector<std::pair<std::int64_t, double>> points;
  std::optional<double> slope;  // per observation index over the trailing window
};

/// Records lacking the requested delta (hal) are skipped.
DriftSeries drift_series(std::span<const AnomalyRecord> history, DriftMetric metric, std::size_t window);

// ---- history store ------------------------------------------------------

/// One flat JSON object per line, fixed key order, doubles at round-trip
/// precision.
std::string format_history_line(const AnomalyRecord& record);
AnomalyRecord parse_history_line(std::string_view line);

/// Appends one line with a single write; on failure the file is truncated
/// back to its previous length.
void append_history(const std::filesystem::path& store, const AnomalyRecord& record);

struct HistoryEntry {
  AnomalyRecord record;
  std::string raw;
};

/// Missing store reads as empty. Throws ParseError with the line number on
/// a corrupt line.
std::vector<HistoryEntry> read_history(const std::filesystem::path& store);

struct ReplayCheck {
  std::size_t records = 0;
  std::size_t threshold_mismatches = 0;
  std::size_t flag_mismatches = 0;
  std::size_t score_mismatches = 0;  // beyond 1e-12 of weights . delta
};

/// Recomputes thresholds and flags per model from the stored scores in file
/// order and compares them bit-exactly with what was stored.
ReplayCheck replay_history(std::span<const AnomalyRecord> history, const MonitorConfig& config);

}  // namespace kgmon
