#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgmon/extract.hpp"
#include "kgmon/kg.hpp"
#include "kgmon/monitor.hpp"
#include "kgmon/ontology.hpp"

namespace kgmon::sim {

enum class Kind { kDropClasses, kDropProperties, kInjectEntities, kDepthSkew, kDeltaNoise };

std::string_view kind_name(Kind k);
Kind parse_kind(std::string_view name);

struct PerturbationSpec {
  Kind kind = Kind::kDropClasses;
  double magnitude = 0.0;  // k, n, f or sigma depending on kind
  std::uint64_t seed = 0;

  void validate() const;
};

/// Applies one perturbation; deterministic given the spec seed. Delta-noise
/// leaves the graph untouched. Throws Error when the magnitude is infeasible.
KnowledgeGraph perturb(const KnowledgeGraph& g, const PerturbationSpec& spec, const Ontology& ontology);

struct ScenarioStep {
  std::vector<ArticleDoc> batch;
  KnowledgeGraph baseline;
  std::int64_t timestamp = 0;
};

using BaselineStream = std::function<ScenarioStep(std::size_t step)>;

struct Schedule {
  std::map<std::size_t, std::vector<PerturbationSpec>> entries;
  std::vector<std::size_t> assert_flag_at;
};

/// Lines are `step<TAB>kind<TAB>magnitude<TAB>seed` or `ASSERT_FLAG_AT step`;
/// '#' comments and blank lines are ignored.
Schedule parse_schedule(std::string_view document);

struct ScenarioConfig {
  MonitorConfig monitor;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  std::string model = "sim";
};

struct ScenarioResult {
  std::vector<AnomalyRecord> records;
  /// First flagged step at or after the earliest scheduled perturbation.
  std::optional<std::size_t> first_flag_step;
  /// Flags raised on steps with nothing scheduled.
  std::size_t false_positive_count = 0;
  std::size_t flag_count = 0;
};

/// Runs `steps` steps: candidate = perturbed baseline, delta noise added to
/// every present delta and clamped to [0,1], then scored by a ModelMonitor.
/// Throws when steps < warmup_min + 1 or a step's perturbation is
/// infeasible (message names the step).
ScenarioResult run_scenario(const BaselineStream& stream, std::size_t steps, const Schedule& schedule,
                            const Ontology& ontology, const ScenarioConfig& config);

struct SyntheticStreamConfig {
  std::uint64_t seed = 1;
  std::size_t entities_per_step = 40;
  std::size_t triples_per_step = 40;
  std::int64_t start_timestamp = 1;
};

/// Random ontology-conforming graphs whose entity names all appear in the
/// step's single synthetic article. Every class is instantiated each step.
/// The ontology must outlive the returned stream.
BaselineStream synthetic_stream(const Ontology& ontology, SyntheticStreamConfig config);

std::string summary_line(const ScenarioResult& result);

}  // namespace kgmon::sim
