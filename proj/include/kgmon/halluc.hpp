#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgmon/extract.hpp"
#include "kgmon/kg.hpp"
#include "kgmon/metrics.hpp"
#include "kgmon/ontology.hpp"

namespace kgmon {

/// Entities with this prefix are synthetic and never trace to a source.
inline constexpr std::string_view kSyntheticPrefix = "##synthetic-";

enum class Stage { kNone = 0, kSourceTrace, kSchemaAlignment, kRuleConformance };

std::string_view stage_name(Stage s);

struct ValidationVerdict {
  std::string entity;
  Stage failed_stage = Stage::kNone;
  std::string evidence;

  bool operator==(const ValidationVerdict&) const = default;
};

struct HallucinationReport {
  std::size_t total = 0;
  std::size_t hallucinated = 0;
  double score = 0.0;
  // Indexed by Stage; slot 0 is unused.
  std::array<std::size_t, 4> per_stage{};
  std::vector<ValidationVerdict> verdicts;  // sorted by entity

  bool operator==(const HallucinationReport&) const = default;
};

/// Case-folded, whitespace-normalized concatenation of a batch's texts,
/// built once so tracing many entities does not re-normalize the batch.
class SourceIndex {
 public:
  explicit SourceIndex(std::span<const ArticleDoc> batch);

  bool empty() const noexcept { return empty_; }
  bool contains(std::string_view entity) const;

 private:
  std::string corpus_;
  bool empty_ = true;
};

/// Case-insensitive substring match of the normalized entity in any article.
bool trace_entity(std::string_view entity, std::span<const ArticleDoc> batch);

struct ValidateOptions {
  int workers = 1;
};

/// Three ordered stages per distinct entity: source trace, schema
/// alignment (class or NER tag known to the ontology), rule conformance
/// (every incident triple uses a declared predicate and is permissible).
/// The first failing stage is recorded. OpenMP over entities.
HallucinationReport validate_graph(const KnowledgeGraph& g_llm, std::span<const ArticleDoc> batch,
                                   const Ontology& ontology, const ValidateOptions& options = {},
                                   Warnings* warnings = nullptr);

/// Serial reference for validate_graph.
HallucinationReport validate_graph_serial(const KnowledgeGraph& g_llm, std::span<const ArticleDoc> batch,
                                          const Ontology& ontology, Warnings* warnings = nullptr);

double hallucination_score(const HallucinationReport& report);

}  // namespace kgmon
