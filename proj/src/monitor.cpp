#include "kgmon/monitor.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <map>

#include <nlohmann/json.hpp>

#include "kgmon/error.hpp"
#include "kgmon/text.hpp"

namespace kgmon {

AnomalyWeights AnomalyWeights::normalized() const {
  const double h = hal.value_or(0.0);
  if (icr < 0 || ipr < 0 || ci < 0 || h < 0) throw ConfigError("anomaly weights must be nonnegative");
  const double sum = icr + ipr + ci + h;
  if (!(sum > 0)) throw ConfigError("at least one anomaly weight must be positive");
  AnomalyWeights w{icr / sum, ipr / sum, ci / sum, std::nullopt};
  if (hal) w.hal = h / sum;
  return w;
}

double anomaly_score(const MetricDelta& delta, const AnomalyWeights& weights) {
  double score = weights.icr * delta.d_icr + weights.ipr * delta.d_ipr + weights.ci * delta.d_ci;
  if (weights.hal) {
    if (!delta.d_hal) throw Error("hal weight set but hal delta is absent");
    score += *weights.hal * *delta.d_hal;
  }
  return score;
}

void ThresholdState::push(double score) {
  window.push_back(score);
  while (window.size() > capacity) window.pop_front();
}

std::optional<double> update_threshold(const ThresholdState& state) {
  const std::size_t n = state.window.size();
  if (n < state.warmup_min || n == 0) return std::nullopt;
  double sum = 0.0;
  for (double s : state.window) sum += s;
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double s : state.window) sq += (s - mean) * (s - mean);
  const double sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
  return mean + state.lambda * sd;
}

std::string top_contributor(const MetricDelta& delta, const AnomalyWeights& weights) {
  std::string best = "icr";
  double best_term = weights.icr * delta.d_icr;
  auto consider = [&](const char* name, double term) {
    if (term > best_term) {
      best_term = term;
      best = name;
    }
  };
  consider("ipr", weights.ipr * delta.d_ipr);
  consider("ci", weights.ci * delta.d_ci);
  if (weights.hal && delta.d_hal) consider("hal", *weights.hal * *delta.d_hal);
  return best;
}

ModelMonitor::ModelMonitor(MonitorConfig config, std::string model)
    : config_(std::move(config)), weights_(config_.weights.normalized()), model_(std::move(model)) {
  if (!(config_.lambda > 0)) throw ConfigError("lambda must be positive");
  if (config_.window == 0 || config_.warmup_min == 0) throw ConfigError("window and warmup_min must be positive");
  state_.capacity = config_.window;
  state_.lambda = config_.lambda;
  state_.warmup_min = config_.warmup_min;
}

ObserveResult ModelMonitor::observe(const Observation& obs) {
  return observe_delta(obs, metric_delta(obs.metrics, obs.baseline_metrics));
}

ObserveResult ModelMonitor::observe_delta(const Observation& obs, const MetricDelta& delta) {
  if (last_timestamp_ && obs.timestamp <= *last_timestamp_) {
    throw Error("non-monotone timestamp for model " + model_ + ": " + std::to_string(obs.timestamp) +
                " after " + std::to_string(*last_timestamp_));
  }
  ObserveResult out;
  AnomalyRecord& r = out.record;
  r.timestamp = obs.timestamp;
  r.model = obs.model.empty() ? model_ : obs.model;
  r.batch_id = obs.batch_id;
  r.metrics = obs.metrics;
  r.baseline_metrics = obs.baseline_metrics;
  r.delta = delta;
  r.score = anomaly_score(delta, weights_);
  r.threshold = update_threshold(state_);
  r.flagged = r.threshold && r.score > *r.threshold;
  r.hall_total = obs.hall_total;
  r.hall_failed = obs.hall_failed;
  if (r.flagged) out.alert = Alert{r.timestamp, r.model, r.score, *r.threshold, top_contributor(delta, weights_)};
  state_.push(r.score);
  last_timestamp_ = obs.timestamp;
  return out;
}

void ModelMonitor::restore(std::int64_t timestamp, double score) {
  state_.push(score);
  last_timestamp_ = timestamp;
}

DriftMetric parse_drift_metric(std::string_view name) {
  if (name == "icr") return DriftMetric::kIcr;
  if (name == "ipr") return DriftMetric::kIpr;
  if (name == "ci") return DriftMetric::kCi;
  if (name == "hal") return DriftMetric::kHal;
  throw Error("unknown drift metric " + std::string(name));
}

DriftSeries drift_series(std::span<const AnomalyRecord> history, DriftMetric metric, std::size_t window) {
  if (window == 0) throw Error("drift window must be positive");
  DriftSeries out;
  for (const auto& r : history) {
    std::optional<double> v;
    switch (metric) {
      case DriftMetric::kIcr: v = r.delta.d_icr; break;
      case DriftMetric::kIpr: v = r.delta.d_ipr; break;
      case DriftMetric::kCi: v = r.delta.d_ci; break;
      case DriftMetric::kHal: v = r.delta.d_hal; break;
    }
    if (v) out.points.emplace_back(r.timestamp, *v);
  }
  const std::size_t n = std::min(window, out.points.size());
  if (n < 2) return out;
  const std::size_t first = out.points.size() - n;
  // x = 0..n-1
  const double x_mean = static_cast<double>(n - 1) / 2.0;
  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) y_mean += out.points[first + i].second;
  y_mean /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (out.points[first + i].second - y_mean);
    sxx += dx * dx;
  }
  out.slope = sxy / sxx;
  return out;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> get_opt(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

std::string format_history_line(const AnomalyRecord& r) {
  ordered_json j;
  j["timestamp"] = r.timestamp;
  j["model"] = r.model;
  j["batch_id"] = r.batch_id;
  j["icr"] = r.metrics.icr;
  j["ipr"] = r.metrics.ipr;
  j["ci"] = r.metrics.ci;
  j["hal"] = opt(r.metrics.hal);
  j["base_icr"] = r.baseline_metrics.icr;
  j["base_ipr"] = r.baseline_metrics.ipr;
  j["base_ci"] = r.baseline_metrics.ci;
  j["base_hal"] = opt(r.baseline_metrics.hal);
  j["d_icr"] = r.delta.d_icr;
  j["d_ipr"] = r.delta.d_ipr;
  j["d_ci"] = r.delta.d_ci;
  j["d_hal"] = opt(r.delta.d_hal);
  j["score"] = r.score;
  j["threshold"] = opt(r.threshold);
  j["flagged"] = r.flagged;
  j["hall_total"] = r.hall_total;
  j["hall_failed"] = r.hall_failed;
  return j.dump();
}

AnomalyRecord parse_history_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  AnomalyRecord r;
  r.timestamp = j.at("timestamp").get<std::int64_t>();
  r.model = j.at("model").get<std::string>();
  r.batch_id = j.at("batch_id").get<std::string>();
  r.metrics = {j.at("icr").get<double>(), j.at("ipr").get<double>(), j.at("ci").get<double>(), get_opt(j, "hal")};
  r.baseline_metrics = {j.at("base_icr").get<double>(), j.at("base_ipr").get<double>(),
                        j.at("base_ci").get<double>(), get_opt(j, "base_hal")};
  r.delta = {j.at("d_icr").get<double>(), j.at("d_ipr").get<double>(), j.at("d_ci").get<double>(),
             get_opt(j, "d_hal")};
  r.score = j.at("score").get<double>();
  r.threshold = get_opt(j, "threshold");
  r.flagged = j.at("flagged").get<bool>();
  r.hall_total = j.at("hall_total").get<std::size_t>();
  r.hall_failed = j.at("hall_failed").get<std::size_t>();
  return r;
}

void append_history(const std::filesystem::path& store, const AnomalyRecord& record) {
  const std::string line = format_history_line(record) + '\n';
  const int fd = ::open(store.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot open history " + store.string() + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw IoError("cannot stat history " + store.string());
  }
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      const int err = errno;
      if (::ftruncate(fd, st.st_size) != 0) {
        // Nothing more can be done; report the original failure.
      }
      ::close(fd);
      throw IoError("history append failed: " + std::string(std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  ::close(fd);
}

std::vector<HistoryEntry> read_history(const std::filesystem::path& store) {
  std::vector<HistoryEntry> out;
  if (!std::filesystem::exists(store)) return out;
  const auto content = text::read_file(store);
  auto all = text::lines(content);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (text::trim(all[i]).empty()) continue;
    try {
      out.push_back({parse_history_line(all[i]), std::string(all[i])});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(i + 1, std::string("corrupt history record: ") + e.what());
    }
  }
  return out;
}

ReplayCheck replay_history(std::span<const AnomalyRecord> history, const MonitorConfig& config) {
  const auto weights = config.weights.normalized();
  std::map<std::string, ThresholdState> states;
  ReplayCheck check;
  for (const auto& r : history) {
    auto [it, inserted] = states.try_emplace(r.model);
    ThresholdState& st = it->second;
    if (inserted) {
      st.capacity = config.window;
      st.lambda = config.lambda;
      st.warmup_min = config.warmup_min;
    }
    const auto threshold = update_threshold(st);
    const bool flagged = threshold && r.score > *threshold;
    ++check.records;
    // Bit-exact comparison is the point here.
    if (threshold.has_value() != r.threshold.has_value() || (threshold && *threshold != *r.threshold)) {
      ++check.threshold_mismatches;
    }
    if (flagged != r.flagged) ++check.flag_mismatches;
    try {
      if (std::fabs(anomaly_score(r.delta, weights) - r.score) > 1e-12) ++check.score_mismatches;
    } catch (const Error&) {
      ++check.score_mismatches;
    }
    st.push(r.score);
  }
  return check;
}

}  // namespace kgmon
