#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kgmon/kg.hpp"
#include "kgmon/ontology.hpp"

namespace kgmon {

struct MetricVector {
  double icr = 0.0;
  double ipr = 0.0;
  double ci = 0.0;
  std::optional<double> hal;

  bool operator==(const MetricVector&) const = default;
};

struct MetricDelta {
  double d_icr = 0.0;
  double d_ipr = 0.0;
  double d_ci = 0.0;
  std::optional<double> d_hal;

  bool operator==(const MetricDelta&) const = default;
};

using Warnings = std::vector<std::string>;

// |instantiated ontology classes| / |classes|. Throws on an empty ontology.
double icr(const KnowledgeGraph& g, const Ontology& ontology);

// |instantiated ontology properties| / |properties|. Throws when the
// ontology has no properties.
double ipr(const KnowledgeGraph& g, const Ontology& ontology);

// Sum over ontology classes of ir(c) / 2^depth(c), with ir counting direct
// assertions among ontology-classed entities. 0 with a warning when there
// are none.
double ci(const KnowledgeGraph& g, const Ontology& ontology, Warnings* warnings = nullptr);

MetricVector metric_vector(const KnowledgeGraph& g, const Ontology& ontology, Warnings* warnings = nullptr);

MetricDelta metric_delta(const MetricVector& candidate, const MetricVector& baseline);

}  // namespace kgmon
