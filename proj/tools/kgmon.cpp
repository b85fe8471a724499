#include <csignal>
#include <ctime>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kgmon/app.hpp"
#include "kgmon/error.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  using namespace kgmon;
  CLI::App cli{"Knowledge-graph reliability monitor"};
  cli.require_subcommand(1);

  std::string ontology, dictionary, rules, batch, out_path, config_path, schedule_path, history;
  int workers = 1;

  auto* build = cli.add_subcommand("build-baseline", "Build the deterministic baseline graph for a batch");
  build->add_option("--ontology", ontology)->required();
  build->add_option("--dict", dictionary)->required();
  build->add_option("--rules", rules)->required();
  build->add_option("--batch", batch, "Directory, batch file or feed URL")->required();
  build->add_option("--out", out_path)->required();
  build->add_option("--workers", workers)->check(CLI::PositiveNumber);

  std::vector<std::string> candidates;
  std::optional<std::int64_t> timestamp;
  auto* evaluate = cli.add_subcommand("evaluate", "Compare candidate graphs against the baseline");
  evaluate->add_option("--config", config_path)->required();
  evaluate->add_option("--batch", batch)->required();
  evaluate->add_option("--candidate", candidates, "MODEL=PATH or MODEL=live")->required();
  evaluate->add_option("--timestamp", timestamp);

  double interval = 60.0;
  std::optional<std::size_t> max_cycles;
  auto* monitor = cli.add_subcommand("monitor", "Poll the feed and evaluate every interval");
  monitor->add_option("--config", config_path)->required();
  monitor->add_option("--interval", interval)->check(CLI::NonNegativeNumber);
  monitor->add_option("--max-cycles", max_cycles);

  std::size_t steps = 0;
  auto* simulate = cli.add_subcommand("simulate", "Run a perturbation scenario over a synthetic stream");
  simulate->add_option("--config", config_path)->required();
  simulate->add_option("--schedule", schedule_path)->required();
  simulate->add_option("--steps", steps)->required();

  std::optional<std::string> model;
  std::string format = "table";
  auto* report = cli.add_subcommand("report", "Render the history store");
  report->add_option("--history", history)->required();
  report->add_option("--timestamp", timestamp);
  report->add_option("--model", model);
  report->add_option("--format", format)->check(CLI::IsMember({"table", "records"}));

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*build) {
      return app::cmd_build_baseline(ontology, dictionary, rules, batch, out_path, workers, std::cerr);
    }
    if (*report) {
      return app::cmd_report(history, timestamp, model,
                             format == "table" ? app::ReportFormat::kTable : app::ReportFormat::kRecords, std::cout);
    }
    const auto config = app::RunConfig::load(config_path);
    if (*evaluate) {
      std::vector<app::CandidateSource> sources;
      for (const auto& c : candidates) sources.push_back(app::parse_candidate(c));
      const std::int64_t ts = timestamp.value_or(static_cast<std::int64_t>(std::time(nullptr)));
      return app::cmd_evaluate(config, batch, std::move(sources), ts, std::cout, std::cerr);
    }
    if (*monitor) {
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      return app::cmd_monitor(config, {interval, max_cycles, &g_stop}, std::cerr);
    }
    if (*simulate) return app::cmd_simulate(config, schedule_path, steps, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "ERROR " << e.what() << '\n';
    return app::kExitError;
  }
  return app::kExitError;
}
