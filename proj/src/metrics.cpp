#include "kgmon/metrics.hpp"

#include <cmath>
#include <map>

#include "kgmon/error.hpp"

namespace kgmon {

double icr(const KnowledgeGraph& g, const Ontology& ontology) {
  if (ontology.class_count() == 0) throw Error("ICR undefined: ontology has no classes");
  std::size_t inst = 0;
  for (const auto& cls : instantiated_classes(g)) inst += ontology.has_class(cls) ? 1 : 0;
  return static_cast<double>(inst) / static_cast<double>(ontology.class_count());
}

double ipr(const KnowledgeGraph& g, const Ontology& ontology) {
  if (ontology.property_count() == 0) throw Error("IPR undefined: ontology has no properties");
  std::size_t inst = 0;
  for (const auto& p : instantiated_properties(g)) inst += ontology.has_property(p) ? 1 : 0;
  return static_cast<double>(inst) / static_cast<double>(ontology.property_count());
}

double ci(const KnowledgeGraph& g, const Ontology& ontology, Warnings* warnings) {
  std::map<std::string, std::size_t, std::less<>> counts;
  std::size_t total = 0;
  for (const auto& [e, info] : g.entity_map()) {
    if (!ontology.has_class(info.cls)) continue;
    ++counts[info.cls];
    ++total;
  }
  if (total == 0) {
    if (warnings) warnings->push_back("CI: no ontology-classed entities, CI defined as 0");
    return 0.0;
  }
  // Sum n * 2^-depth, then divide once.
  double scaled = 0.0;
  for (const auto& [cls, n] : counts) scaled += std::ldexp(static_cast<double>(n), -ontology.depth(cls));
  return scaled / static_cast<double>(total);
}

MetricVector metric_vector(const KnowledgeGraph& g, const Ontology& ontology, Warnings* warnings) {
  return {icr(g, ontology), ipr(g, ontology), ci(g, ontology, warnings), std::nullopt};
}

MetricDelta metric_delta(const MetricVector& candidate, const MetricVector& baseline) {
  MetricDelta d{std::fabs(candidate.icr - baseline.icr), std::fabs(candidate.ipr - baseline.ipr),
                std::fabs(candidate.ci - baseline.ci), std::nullopt};
  if (candidate.hal && baseline.hal) d.d_hal = std::fabs(*candidate.hal - *baseline.hal);
  return d;
}

}  // namespace kgmon
