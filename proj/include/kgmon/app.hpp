#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kgmon/extract.hpp"
#include "kgmon/monitor.hpp"
#include "kgmon/simlab.hpp"

namespace kgmon::app {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitFlagged = 2 };

struct RunConfig {
  fs::path ontology;
  fs::path dictionary;
  fs::path rules;
  MonitorConfig monitor;
  fs::path history;
  fs::path seen_set;  // defaults to <history>.seen
  std::optional<fs::path> endpoint;
  std::optional<fs::path> prompt_template;
  std::optional<std::string> feed_url;
  std::vector<std::string> models;
  int workers = 1;
  sim::SyntheticStreamConfig simulation;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  /// JSON document; relative paths resolve against the config's directory.
  static RunConfig load(const fs::path& path);
  static RunConfig from_json(const std::string& document, const fs::path& base_dir);
};

/// Sorted unique article ids, one per line.
std::vector<std::string> read_seen_set(const fs::path& path);
void write_seen_set(const fs::path& path, const std::vector<std::string>& ids);

/// Directory of *.txt, batch record file, or http(s) feed URL. Feed mode
/// drops ids already in the seen-set (the caller records new ids once the
/// batch has been processed).
std::vector<ArticleDoc> load_batch(const std::string& source, const fs::path& seen_set, std::ostream& diag);

int cmd_build_baseline(const fs::path& ontology, const fs::path& dictionary, const fs::path& rules,
                       const std::string& batch_source, const fs::path& out, int workers, std::ostream& diag);

struct CandidateSource {
  std::string model;
  std::optional<fs::path> file;  // nullopt: live endpoint
};

/// Parses `MODEL=PATH` or `MODEL=live`.
CandidateSource parse_candidate(const std::string& arg);

/// Exit 0 when nothing flagged, 2 when any model flagged, 1 on any
/// operational error (other models still evaluated and recorded).
int cmd_evaluate(const RunConfig& config, const std::string& batch_source, std::vector<CandidateSource> candidates,
                 std::int64_t timestamp, std::ostream& out, std::ostream& diag);

struct MonitorLoopOptions {
  double interval = 60.0;
  std::optional<std::size_t> max_cycles;
  const std::atomic<bool>* stop = nullptr;
};

int cmd_monitor(const RunConfig& config, const MonitorLoopOptions& options, std::ostream& diag);

enum class ReportFormat { kTable, kRecords };

struct ReportColumn {
  std::string model;
  MetricVector metrics;
};

struct ReportTable {
  std::int64_t timestamp = 0;
  std::string batch_id;
  MetricVector baseline;
  std::vector<ReportColumn> columns;  // first-appearance order in the history
};

std::vector<ReportTable> build_report_tables(const std::vector<HistoryEntry>& history,
                                             std::optional<std::int64_t> timestamp,
                                             std::optional<std::string> model);
std::string render_table(const ReportTable& table);

int cmd_report(const fs::path& history, std::optional<std::int64_t> timestamp, std::optional<std::string> model,
               ReportFormat format, std::ostream& out);

/// Exit 0 when every ASSERT_FLAG_AT holds, 2 otherwise.
int cmd_simulate(const RunConfig& config, const fs::path& schedule, std::size_t steps, std::ostream& out,
                 std::ostream& diag);

}  // namespace kgmon::app
