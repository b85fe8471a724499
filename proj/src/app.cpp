#include "kgmon/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "kgmon/error.hpp"
#include "kgmon/halluc.hpp"
#include "kgmon/llm_ingest.hpp"
#include "kgmon/metrics.hpp"
#include "kgmon/text.hpp"

namespace kgmon::app {

namespace {

bool is_url(const std::string& s) { return s.starts_with("http://") || s.starts_with("https://"); }

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("config is missing ") + what);
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

void emit_warnings(const Warnings& w, std::ostream& diag) {
  for (const auto& line : w) diag << "WARN " << line << '\n';
}

void write_text_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Pipeline {
  Ontology ontology;
  Dictionary dictionary;
  RuleSet rules;
};

Pipeline load_pipeline(const fs::path& ontology, const fs::path& dictionary, const fs::path& rules,
                       std::ostream& diag) {
  require_file(ontology, "ontology");
  require_file(dictionary, "dictionary");
  require_file(rules, "rules");
  Pipeline p;
  p.ontology = Ontology::load_file(ontology);
  p.dictionary = Dictionary::load_file(dictionary, p.ontology);
  p.rules = RuleSet::load_file(rules, p.ontology);
  for (const auto& d : p.rules.diagnostics) diag << "WARN " << d << '\n';
  return p;
}

// Evaluates one non-empty batch for every candidate; returns the exit code.
int evaluate_batch(const RunConfig& config, const Pipeline& pipe, const std::vector<ArticleDoc>& batch,
                   std::vector<CandidateSource> candidates, std::int64_t timestamp, std::ostream& out,
                   std::ostream& diag) {
  std::sort(candidates.begin(), candidates.end(),
            [](const CandidateSource& a, const CandidateSource& b) { return a.model < b.model; });

  const std::string batch_id = "batch-" + std::to_string(timestamp);
  BaselineOptions bopts{batch_id, timestamp, config.workers};
  const auto baseline = build_baseline(batch, pipe.dictionary, pipe.rules, pipe.ontology, bopts);

  Warnings warnings;
  MetricVector base = metric_vector(baseline.graph, pipe.ontology, &warnings);
  base.hal = validate_graph(baseline.graph, batch, pipe.ontology, {config.workers}, &warnings).score;
  emit_warnings(warnings, diag);

  const auto history = read_history(config.history);

  std::optional<EndpointConfig> endpoint;
  std::optional<PromptTemplate> prompt;
  bool any_error = false;
  bool any_flag = false;

  for (const auto& cand : candidates) {
    try {
      KnowledgeGraph graph;
      if (cand.file) {
        graph = ingest_offline(*cand.file);
      } else {
        if (!config.endpoint || !config.prompt_template) {
          throw ConfigError("live candidate " + cand.model + " needs endpoint and prompt_template in the config");
        }
        if (!endpoint) endpoint = EndpointConfig::load_file(*config.endpoint);
        if (!prompt) prompt = PromptTemplate::load_file(*config.prompt_template);
        EndpointConfig ec = *endpoint;
        ec.model_name = cand.model;
        auto extraction = extract_batch(batch, ec, *prompt, pipe.ontology);
        for (const auto& d : extraction.diagnostics) {
          if (!d.ok) diag << "WARN model " << cand.model << " article " << d.article_id << " failed: " << d.error << '\n';
          else if (d.unparsed_lines > 0)
            diag << "WARN model " << cand.model << " article " << d.article_id << ": " << d.unparsed_lines
                 << " unparsed lines\n";
        }
        graph = std::move(extraction.graph);
      }

      Warnings w;
      const auto report = validate_graph(graph, batch, pipe.ontology, {config.workers}, &w);
      MetricVector metrics = metric_vector(graph, pipe.ontology, &w);
      metrics.hal = report.score;
      emit_warnings(w, diag);

      ModelMonitor monitor(config.monitor, cand.model);
      for (const auto& h : history) {
        if (h.record.model == cand.model) monitor.restore(h.record.timestamp, h.record.score);
      }
      Observation obs{timestamp, cand.model, batch_id, metrics, base, report.total, report.hallucinated};
      auto res = monitor.observe(obs);
      append_history(config.history, res.record);
      out << format_history_line(res.record) << '\n';
      if (res.alert) {
        any_flag = true;
        diag << "ALERT model " << res.alert->model << " t=" << res.alert->timestamp << " score=" << res.alert->score
             << " threshold=" << res.alert->threshold << " top=" << res.alert->top_metric << '\n';
      }
    } catch (const ExtractionFailed& e) {
      any_error = true;
      for (const auto& d : e.diagnostics()) {
        diag << "WARN model " << cand.model << " article " << d.article_id << " failed: " << d.error << '\n';
      }
      diag << "ERROR model " << cand.model << ": " << e.what() << '\n';
    } catch (const std::exception& e) {
      any_error = true;
      diag << "ERROR model " << cand.model << ": " << e.what() << '\n';
    }
  }
  if (any_error) return kExitError;
  return any_flag ? kExitFlagged : kExitOk;
}

void remember_ids(const fs::path& seen_set, const std::vector<ArticleDoc>& batch) {
  auto ids = read_seen_set(seen_set);
  for (const auto& a : batch) ids.push_back(a.id);
  write_seen_set(seen_set, ids);
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& document, const fs::path& base_dir) {
  RunConfig c;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  try {
    const auto j = nlohmann::json::parse(document);
    if (j.contains("ontology")) c.ontology = resolve(j.at("ontology").get<std::string>());
    if (j.contains("dictionary")) c.dictionary = resolve(j.at("dictionary").get<std::string>());
    if (j.contains("rules")) c.rules = resolve(j.at("rules").get<std::string>());
    c.history = resolve(j.value("history", std::string("history.jsonl")));
    c.seen_set = j.contains("seen_set") ? resolve(j.at("seen_set").get<std::string>())
                                        : fs::path(c.history.string() + ".seen");
    if (j.contains("endpoint")) c.endpoint = resolve(j.at("endpoint").get<std::string>());
    if (j.contains("prompt_template")) c.prompt_template = resolve(j.at("prompt_template").get<std::string>());
    if (j.contains("feed_url")) c.feed_url = j.at("feed_url").get<std::string>();
    c.models = j.value("models", std::vector<std::string>{});
    c.workers = j.value("workers", 1);
    c.monitor.lambda = j.value("lambda", 2.0);
    c.monitor.window = j.value("window", std::size_t{30});
    c.monitor.warmup_min = j.value("warmup_min", std::size_t{5});
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      c.monitor.weights.icr = w.value("icr", 0.0);
      c.monitor.weights.ipr = w.value("ipr", 0.0);
      c.monitor.weights.ci = w.value("ci", 0.0);
      if (w.contains("hal")) c.monitor.weights.hal = w.at("hal").get<double>();
    }
    c.monitor.weights = c.monitor.weights.normalized();
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      c.simulation.seed = s.value("seed", std::uint64_t{1});
      c.simulation.entities_per_step = s.value("entities_per_step", std::size_t{40});
      c.simulation.triples_per_step = s.value("triples_per_step", std::size_t{40});
      c.noise_sigma = s.value("noise_sigma", 0.0);
      c.noise_seed = s.value("noise_seed", std::uint64_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (!(c.monitor.lambda > 0) || c.monitor.window == 0 || c.monitor.warmup_min == 0 || c.workers < 1) {
    throw ConfigError("run config: lambda, window, warmup_min and workers must be positive");
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_json(text::read_file(path), fs::absolute(path).parent_path());
}

std::vector<std::string> read_seen_set(const fs::path& path) {
  std::vector<std::string> ids;
  if (!fs::exists(path)) return ids;
  const auto content = text::read_file(path);
  for (auto line : text::lines(content)) {
    auto id = text::trim(line);
    if (!id.empty()) ids.emplace_back(id);
  }
  return ids;
}

void write_seen_set(const fs::path& path, const std::vector<std::string>& ids) {
  std::set<std::string> sorted(ids.begin(), ids.end());
  std::string content;
  for (const auto& id : sorted) content += id + '\n';
  write_text_atomically(path, content);
}

std::vector<ArticleDoc> load_batch(const std::string& source, const fs::path& seen_set, std::ostream& diag) {
  std::vector<ArticleDoc> batch;
  if (is_url(source)) {
    const auto scheme_end = source.find("://");
    const auto path_start = source.find('/', scheme_end + 3);
    httplib::Client client(source.substr(0, path_start));
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(std::chrono::seconds(60));
    auto res = client.Get(path_start == std::string::npos ? "/" : source.substr(path_start));
    if (!res) throw IoError("feed request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw IoError("feed returned status " + std::to_string(res->status));
    auto all = parse_batch_records(res->body);
    const auto seen_ids = read_seen_set(seen_set);
    const std::set<std::string> seen(seen_ids.begin(), seen_ids.end());
    for (auto& a : all) {
      if (!seen.count(a.id)) batch.push_back(std::move(a));
    }
  } else if (fs::is_directory(source)) {
    batch = load_batch_directory(source);
  } else {
    batch = parse_batch_records(text::read_file(source));
  }
  std::set<std::string_view> ids;
  for (const auto& a : batch) {
    if (!ids.insert(a.id).second) throw Error("duplicate article id in batch: " + a.id);
  }
  if (batch.empty()) diag << "WARN empty batch from " << source << '\n';
  return batch;
}

int cmd_build_baseline(const fs::path& ontology, const fs::path& dictionary, const fs::path& rules,
                       const std::string& batch_source, const fs::path& out, int workers, std::ostream& diag) {
  try {
    const auto pipe = load_pipeline(ontology, dictionary, rules, diag);
    const auto batch = load_batch(batch_source, {}, diag);
    const auto result = build_baseline(batch, pipe.dictionary, pipe.rules, pipe.ontology, {"", 0, workers});
    if (result.rejected > 0) diag << "WARN " << result.rejected << " impermissible triples rejected\n";
    write_text_atomically(out, canonical_serialize(result.graph));
    return kExitOk;
  } catch (const std::exception& e) {
    diag << "ERROR " << e.what() << '\n';
    return kExitError;
  }
}

CandidateSource parse_candidate(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    throw ConfigError("candidate must be MODEL=PATH or MODEL=live: " + arg);
  }
  CandidateSource c{arg.substr(0, eq), std::nullopt};
  const auto rhs = arg.substr(eq + 1);
  if (rhs != "live") c.file = rhs;
  return c;
}

int cmd_evaluate(const RunConfig& config, const std::string& batch_source, std::vector<CandidateSource> candidates,
                 std::int64_t timestamp, std::ostream& out, std::ostream& diag) {
  try {
    if (candidates.empty()) throw ConfigError("evaluate needs at least one --candidate");
    const auto pipe = load_pipeline(config.ontology, config.dictionary, config.rules, diag);
    const auto batch = load_batch(batch_source, config.seen_set, diag);
    if (batch.empty()) return kExitOk;
    const int rc = evaluate_batch(config, pipe, batch, std::move(candidates), timestamp, out, diag);
    if (is_url(batch_source)) remember_ids(config.seen_set, batch);
    return rc;
  } catch (const std::exception& e) {
    diag << "ERROR " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_monitor(const RunConfig& config, const MonitorLoopOptions& options, std::ostream& diag) {
  Pipeline pipe;
  std::vector<CandidateSource> candidates;
  try {
    if (!config.feed_url) throw ConfigError("monitor needs feed_url in the config");
    if (config.models.empty()) throw ConfigError("monitor needs at least one model in the config");
    if (!config.endpoint || !config.prompt_template) throw ConfigError("monitor needs endpoint and prompt_template");
    require_file(*config.endpoint, "endpoint");
    require_file(*config.prompt_template, "prompt_template");
    EndpointConfig::load_file(*config.endpoint);
    PromptTemplate::load_file(*config.prompt_template);
    pipe = load_pipeline(config.ontology, config.dictionary, config.rules, diag);
    for (const auto& m : config.models) candidates.push_back({m, std::nullopt});
  } catch (const std::exception& e) {
    diag << "ERROR " << e.what() << '\n';
    return kExitError;
  }

  auto stopping = [&] { return options.stop && options.stop->load(); };
  std::int64_t last_ts = 0;
  for (const auto& h : read_history(config.history)) last_ts = std::max(last_ts, h.record.timestamp);

  for (std::size_t cycle = 0; !options.max_cycles || cycle < *options.max_cycles; ++cycle) {
    if (stopping()) break;
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    const std::int64_t ts = std::max<std::int64_t>(now, last_ts + 1);
    try {
      const auto batch = load_batch(*config.feed_url, config.seen_set, diag);
      if (!batch.empty()) {
        evaluate_batch(config, pipe, batch, candidates, ts, diag, diag);
        remember_ids(config.seen_set, batch);
        last_ts = ts;
      }
    } catch (const std::exception& e) {
      diag << "WARN cycle " << cycle << " skipped: " << e.what() << '\n';
    }
    if (options.max_cycles && cycle + 1 >= *options.max_cycles) break;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(options.interval);
    while (!stopping() && std::chrono::steady_clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }
  return kExitOk;
}

std::vector<ReportTable> build_report_tables(const std::vector<HistoryEntry>& history,
                                             std::optional<std::int64_t> timestamp,
                                             std::optional<std::string> model) {
  std::map<std::int64_t, ReportTable> tables;
  for (const auto& h : history) {
    const auto& r = h.record;
    if (timestamp && r.timestamp != *timestamp) continue;
    if (model && r.model != *model) continue;
    auto [it, inserted] = tables.try_emplace(r.timestamp);
    ReportTable& t = it->second;
    if (inserted) {
      t.timestamp = r.timestamp;
      t.batch_id = r.batch_id;
      t.baseline = r.baseline_metrics;
    }
    auto col = std::find_if(t.columns.begin(), t.columns.end(),
                            [&](const ReportColumn& c) { return c.model == r.model; });
    if (col == t.columns.end()) t.columns.push_back({r.model, r.metrics});
    else col->metrics = r.metrics;
  }
  std::vector<ReportTable> out;
  for (auto& [ts, t] : tables) out.push_back(std::move(t));
  return out;
}

std::string render_table(const ReportTable& table) {
  std::vector<std::string> header{"Metric", "GT"};
  for (const auto& c : table.columns) header.push_back(c.model);
  std::vector<std::vector<std::string>> rows;
  rows.push_back(header);
  auto add_row = [&](const char* name, auto get) {
    std::vector<std::string> row{name};
    auto cell = [](const std::optional<double>& v) { return v ? fixed2(*v) : std::string(); };
    row.push_back(cell(get(table.baseline)));
    for (const auto& c : table.columns) row.push_back(cell(get(c.metrics)));
    rows.push_back(std::move(row));
  };
  add_row("ICR", [](const MetricVector& m) { return std::optional<double>(m.icr); });
  add_row("IPR", [](const MetricVector& m) { return std::optional<double>(m.ipr); });
  add_row("CI", [](const MetricVector& m) { return std::optional<double>(m.ci); });
  add_row("Hal", [](const MetricVector& m) { return m.hal; });

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  out << "timestamp " << table.timestamp << "  batch " << table.batch_id << '\n';
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(width[i] - row[i].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

int cmd_report(const fs::path& history, std::optional<std::int64_t> timestamp, std::optional<std::string> model,
               ReportFormat format, std::ostream& out) {
  const auto entries = read_history(history);
  if (format == ReportFormat::kRecords) {
    for (const auto& h : entries) {
      if (timestamp && h.record.timestamp != *timestamp) continue;
      if (model && h.record.model != *model) continue;
      out << h.raw << '\n';
    }
    return kExitOk;
  }
  const auto tables = build_report_tables(entries, timestamp, model);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i > 0) out << '\n';
    out << render_table(tables[i]);
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& config, const fs::path& schedule_path, std::size_t steps, std::ostream& out,
                 std::ostream& diag) {
  try {
    require_file(config.ontology, "ontology");
    const auto ontology = Ontology::load_file(config.ontology);
    const auto schedule = sim::parse_schedule(text::read_file(schedule_path));
    sim::ScenarioConfig sc;
    sc.monitor = config.monitor;
    sc.noise_sigma = config.noise_sigma;
    sc.noise_seed = config.noise_seed;
    const auto result =
        sim::run_scenario(sim::synthetic_stream(ontology, config.simulation), steps, schedule, ontology, sc);
    for (const auto& r : result.records) out << format_history_line(r) << '\n';
    out << sim::summary_line(result) << '\n';
    for (const auto& r : result.records) {
      if (r.flagged) diag << "ALERT model " << r.model << " t=" << r.timestamp << " score=" << r.score << '\n';
    }
    bool ok = true;
    for (auto step : schedule.assert_flag_at) {
      if (result.first_flag_step != step) {
        ok = false;
        diag << "WARN ASSERT_FLAG_AT " << step << " failed (first flag: "
             << (result.first_flag_step ? std::to_string(*result.first_flag_step) : std::string("none")) << ")\n";
      }
    }
    return ok ? kExitOk : kExitFlagged;
  } catch (const std::exception& e) {
    diag << "ERROR " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace kgmon::app
