#include "kgmon/halluc.hpp"

#include <map>
#include <optional>

#include "kgmon/text.hpp"

namespace kgmon {

namespace {

constexpr char kArticleSeparator = '\x01';

std::string normalize_for_trace(std::string_view s) { return text::fold_case(text::normalize_surface(s)); }

// Ontology class an asserted class stands for: itself, or the target of an
// NER tag.
std::optional<std::string> aligned_class(std::string_view cls, const Ontology& ontology) {
  if (ontology.has_class(cls)) return std::string(cls);
  return ontology.resolve_tag(cls);
}

struct Context {
  const KnowledgeGraph& graph;
  const Ontology& ontology;
  const SourceIndex& sources;
  // entity -> incident triples
  std::map<std::string_view, std::vector<const TripleKey*>> incident;

  Context(const KnowledgeGraph& g, const Ontology& o, const SourceIndex& s) : graph(g), ontology(o), sources(s) {
    for (const auto& [key, prov] : g.triple_map()) {
      incident[key.subject].push_back(&key);
      if (key.object != key.subject) incident[key.object].push_back(&key);
    }
  }

  ValidationVerdict judge(const std::string& entity, const KnowledgeGraph::EntityInfo& info) const {
    if (!sources.contains(entity)) return {entity, Stage::kSourceTrace, "absent from batch"};
    if (!aligned_class(info.cls, ontology)) return {entity, Stage::kSchemaAlignment, info.cls};
    auto it = incident.find(entity);
    if (it != incident.end()) {
      for (const TripleKey* t : it->second) {
        if (!triple_conforms(*t)) {
          return {entity, Stage::kRuleConformance, t->subject + ' ' + t->predicate + ' ' + t->object};
        }
      }
    }
    return {entity, Stage::kNone, {}};
  }

  bool triple_conforms(const TripleKey& t) const {
    if (!ontology.has_property(t.predicate)) return false;
    auto s = aligned_class(*graph.class_of(t.subject), ontology);
    auto o = aligned_class(*graph.class_of(t.object), ontology);
    return s && o && ontology.is_permissible(*s, t.predicate, *o);
  }
};

HallucinationReport summarize(std::vector<ValidationVerdict> verdicts) {
  HallucinationReport r;
  r.total = verdicts.size();
  for (const auto& v : verdicts) {
    if (v.failed_stage == Stage::kNone) continue;
    ++r.hallucinated;
    ++r.per_stage[static_cast<std::size_t>(v.failed_stage)];
  }
  r.verdicts = std::move(verdicts);
  r.score = hallucination_score(r);
  return r;
}

void warn_degenerate(const KnowledgeGraph& g, const SourceIndex& sources, Warnings* warnings) {
  if (!warnings) return;
  if (g.entity_count() == 0) warnings->push_back("hallucination: candidate graph is empty, score defined as 0");
  else if (sources.empty()) warnings->push_back("hallucination: empty batch, every entity fails source-trace");
}

}  // namespace

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kNone: return "none";
    case Stage::kSourceTrace: return "source-trace";
    case Stage::kSchemaAlignment: return "schema-alignment";
    case Stage::kRuleConformance: return "rule-conformance";
  }
  return "unknown";
}

SourceIndex::SourceIndex(std::span<const ArticleDoc> batch) {
  for (const auto& a : batch) {
    corpus_.push_back(kArticleSeparator);
    corpus_ += normalize_for_trace(a.text);
    empty_ = false;
  }
  corpus_.push_back(kArticleSeparator);
}

bool SourceIndex::contains(std::string_view entity) const {
  if (entity.starts_with(kSyntheticPrefix)) return false;
  const auto needle = normalize_for_trace(entity);
  if (needle.empty()) return false;
  return corpus_.find(needle) != std::string::npos;
}

bool trace_entity(std::string_view entity, std::span<const ArticleDoc> batch) {
  return SourceIndex(batch).contains(entity);
}

HallucinationReport validate_graph(const KnowledgeGraph& g_llm, std::span<const ArticleDoc> batch,
                                   const Ontology& ontology, const ValidateOptions& options, Warnings* warnings) {
  const SourceIndex sources(batch);
  warn_degenerate(g_llm, sources, warnings);
  const Context ctx(g_llm, ontology, sources);

  std::vector<const std::pair<const std::string, KnowledgeGraph::EntityInfo>*> items;
  items.reserve(g_llm.entity_count());
  for (const auto& kv : g_llm.entity_map()) items.push_back(&kv);

  std::vector<ValidationVerdict> verdicts(items.size());
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for num_threads(options.workers < 1 ? 1 : options.workers) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) verdicts[i] = ctx.judge(items[i]->first, items[i]->second);

  // entity_map is ordered, so verdicts are already sorted by entity.
  return summarize(std::move(verdicts));
}

HallucinationReport validate_graph_serial(const KnowledgeGraph& g_llm, std::span<const ArticleDoc> batch,
                                          const Ontology& ontology, Warnings* warnings) {
  const SourceIndex sources(batch);
  warn_degenerate(g_llm, sources, warnings);
  const Context ctx(g_llm, ontology, sources);
  std::vector<ValidationVerdict> verdicts;
  for (const auto& [entity, info] : g_llm.entity_map()) verdicts.push_back(ctx.judge(entity, info));
  return summarize(std::move(verdicts));
}

double hallucination_score(const HallucinationReport& report) {
  if (report.total == 0) return 0.0;
  return static_cast<double>(report.hallucinated) / static_cast<double>(report.total);
}

}  // namespace kgmon
