#include "kgmon/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "kgmon/error.hpp"
#include "kgmon/halluc.hpp"
#include "kgmon/metrics.hpp"
#include "kgmon/text.hpp"

namespace kgmon::sim {

namespace {

// Unbiased index in [0, n) that does not depend on the standard library's
// distribution implementation.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

template <typename T>
std::vector<T> choose(std::vector<T> items, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) std::swap(items[i], items[i + uniform_index(rng, items.size() - i)]);
  items.resize(k);
  return items;
}

std::size_t as_count(const PerturbationSpec& spec) { return static_cast<std::size_t>(spec.magnitude); }

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::kDropClasses: return "drop-classes";
    case Kind::kDropProperties: return "drop-properties";
    case Kind::kInjectEntities: return "inject-entities";
    case Kind::kDepthSkew: return "depth-skew";
    case Kind::kDeltaNoise: return "delta-noise";
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  for (Kind k : {Kind::kDropClasses, Kind::kDropProperties, Kind::kInjectEntities, Kind::kDepthSkew,
                 Kind::kDeltaNoise}) {
    if (kind_name(k) == name) return k;
  }
  throw Error("unknown perturbation kind " + std::string(name));
}

void PerturbationSpec::validate() const {
  switch (kind) {
    case Kind::kDropClasses:
    case Kind::kDropProperties:
    case Kind::kInjectEntities:
      if (magnitude < 1 || magnitude != std::floor(magnitude)) {
        throw Error(std::string(kind_name(kind)) + " needs a positive integer magnitude");
      }
      break;
    case Kind::kDepthSkew:
      if (!(magnitude >= 0 && magnitude <= 1)) throw Error("depth-skew fraction must be in [0,1]");
      break;
    case Kind::kDeltaNoise:
      if (!(magnitude >= 0)) throw Error("delta-noise sigma must be >= 0");
      break;
  }
}

KnowledgeGraph perturb(const KnowledgeGraph& g, const PerturbationSpec& spec, const Ontology& ontology) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  KnowledgeGraph out = g;

  switch (spec.kind) {
    case Kind::kDropClasses: {
      std::vector<std::string> inst;
      for (const auto& c : instantiated_classes(g)) {
        if (ontology.has_class(c)) inst.push_back(c);
      }
      if (as_count(spec) > inst.size()) {
        throw Error("drop-classes " + std::to_string(as_count(spec)) + " exceeds " + std::to_string(inst.size()) +
                    " instantiated classes");
      }
      const auto dropped = choose(std::move(inst), as_count(spec), rng);
      out.remove_entities([&](const std::string&, const KnowledgeGraph::EntityInfo& info) {
        return std::find(dropped.begin(), dropped.end(), info.cls) != dropped.end();
      });
      break;
    }
    case Kind::kDropProperties: {
      std::vector<std::string> inst;
      for (const auto& p : instantiated_properties(g)) {
        if (ontology.has_property(p)) inst.push_back(p);
      }
      if (as_count(spec) > inst.size()) {
        throw Error("drop-properties " + std::to_string(as_count(spec)) + " exceeds " +
                    std::to_string(inst.size()) + " instantiated properties");
      }
      const auto dropped = choose(std::move(inst), as_count(spec), rng);
      out.remove_triples([&](const TripleKey& k) {
        return std::find(dropped.begin(), dropped.end(), k.predicate) != dropped.end();
      });
      break;
    }
    case Kind::kInjectEntities: {
      if (ontology.class_count() == 0) throw Error("inject-entities needs an ontology with classes");
      std::vector<std::string> classes;
      for (const auto& [name, def] : ontology.classes()) classes.push_back(name);
      const std::string base = std::string(kSyntheticPrefix) + std::to_string(spec.seed) + "-";
      std::size_t added = 0;
      for (std::size_t i = 0; added < as_count(spec); ++i) {
        auto r = out.add_entity({base + std::to_string(i), classes[uniform_index(rng, classes.size())], "synthetic"});
        if (r == KnowledgeGraph::AddResult::kAdded) ++added;
      }
      break;
    }
    case Kind::kDepthSkew: {
      std::vector<std::string> eligible;
      for (const auto& [e, info] : g.entity_map()) {
        if (!ontology.has_class(info.cls) || ontology.depth(info.cls) != 0) continue;
        if (ontology.deepest_descendant(info.cls) != info.cls) eligible.push_back(e);
      }
      const auto count = static_cast<std::size_t>(std::floor(spec.magnitude * eligible.size() + 0.5));
      if (count == 0) {
        if (spec.magnitude > 0 && eligible.empty()) throw Error("depth-skew: no entity in a root class with descendants");
        break;
      }
      for (const auto& e : choose(std::move(eligible), count, rng)) {
        out.set_class(e, ontology.deepest_descendant(*g.class_of(e)));
      }
      break;
    }
    case Kind::kDeltaNoise:
      break;
  }
  return out;
}

Schedule parse_schedule(std::string_view document) {
  Schedule s;
  auto all = text::lines(document);
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto line = all[i];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (text::trim(line).empty()) continue;
    try {
      auto ws = text::split_ws(line);
      if (ws.size() == 2 && ws[0] == "ASSERT_FLAG_AT") {
        s.assert_flag_at.push_back(std::stoull(std::string(ws[1])));
        continue;
      }
      auto f = text::split(text::trim(line), '\t');
      if (f.size() != 4) throw Error("expected step<TAB>kind<TAB>magnitude<TAB>seed");
      PerturbationSpec spec;
      const auto step = std::stoull(std::string(text::trim(f[0])));
      spec.kind = parse_kind(text::trim(f[1]));
      spec.magnitude = std::stod(std::string(text::trim(f[2])));
      spec.seed = std::stoull(std::string(text::trim(f[3])));
      spec.validate();
      s.entries[step].push_back(spec);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  return s;
}

ScenarioResult run_scenario(const BaselineStream& stream, std::size_t steps, const Schedule& schedule,
                            const Ontology& ontology, const ScenarioConfig& config) {
  if (steps < config.monitor.warmup_min + 1) {
    throw Error("scenario needs at least warmup_min + 1 = " + std::to_string(config.monitor.warmup_min + 1) +
                " steps, got " + std::to_string(steps));
  }
  ModelMonitor monitor(config.monitor, config.model);
  std::mt19937_64 noise_rng(config.noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::optional<std::size_t> onset;
  if (!schedule.entries.empty()) onset = schedule.entries.begin()->first;

  ScenarioResult result;
  for (std::size_t step = 0; step < steps; ++step) {
    ScenarioStep in = stream(step);
    KnowledgeGraph candidate = in.baseline;
    double step_sigma = 0.0;
    auto sched = schedule.entries.find(step);
    if (sched != schedule.entries.end()) {
      for (const auto& spec : sched->second) {
        try {
          candidate = perturb(candidate, spec, ontology);
        } catch (const Error& e) {
          throw Error("step " + std::to_string(step) + ": " + e.what());
        }
        if (spec.kind == Kind::kDeltaNoise) step_sigma = std::hypot(step_sigma, spec.magnitude);
      }
    }

    const auto base_report = validate_graph_serial(in.baseline, in.batch, ontology);
    const auto cand_report = validate_graph_serial(candidate, in.batch, ontology);
    MetricVector base = metric_vector(in.baseline, ontology);
    MetricVector cand = metric_vector(candidate, ontology);
    base.hal = base_report.score;
    cand.hal = cand_report.score;

    MetricDelta delta = metric_delta(cand, base);
    const double sigma = std::hypot(config.noise_sigma, step_sigma);
    if (sigma > 0) {
      delta.d_icr = clamp01(delta.d_icr + sigma * gauss(noise_rng));
      delta.d_ipr = clamp01(delta.d_ipr + sigma * gauss(noise_rng));
      delta.d_ci = clamp01(delta.d_ci + sigma * gauss(noise_rng));
      if (delta.d_hal) delta.d_hal = clamp01(*delta.d_hal + sigma * gauss(noise_rng));
    }

    Observation obs;
    obs.timestamp = in.timestamp;
    obs.model = config.model;
    obs.batch_id = in.baseline.batch_id;
    obs.metrics = cand;
    obs.baseline_metrics = base;
    obs.hall_total = cand_report.total;
    obs.hall_failed = cand_report.hallucinated;
    auto res = monitor.observe_delta(obs, delta);

    if (res.record.flagged) {
      ++result.flag_count;
      if (sched == schedule.entries.end()) ++result.false_positive_count;
      if (onset && step >= *onset && !result.first_flag_step) result.first_flag_step = step;
    }
    result.records.push_back(std::move(res.record));
  }
  return result;
}

BaselineStream synthetic_stream(const Ontology& ontology, SyntheticStreamConfig config) {
  if (ontology.class_count() == 0) throw Error("synthetic stream needs an ontology with classes");
  return [&ontology, config](std::size_t step) {
    std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + step);
    std::vector<std::string> classes;
    for (const auto& [name, def] : ontology.classes()) classes.push_back(name);

    ScenarioStep out;
    out.timestamp = config.start_timestamp + static_cast<std::int64_t>(step);
    const std::string article_id = "syn" + std::to_string(step);
    out.baseline.batch_id = "step-" + std::to_string(step);
    out.baseline.timestamp = out.timestamp;

    std::string body = "Synthetic report " + std::to_string(step) + ".";
    const std::size_t n = std::max(config.entities_per_step, classes.size());
    std::map<std::string, std::vector<std::string>> by_class;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& cls = i < classes.size() ? classes[i] : classes[uniform_index(rng, classes.size())];
      const std::string name = "Item" + std::to_string(step) + "x" + std::to_string(i);
      out.baseline.add_entity({name, cls, article_id});
      by_class[cls].push_back(name);
      body += " " + name + " appears.";
    }

    // Triples use entities whose class sits under the property's domain/range.
    std::vector<const PropertyDef*> props;
    for (const auto& [name, p] : ontology.properties()) props.push_back(&p);
    auto members_under = [&](const std::string& root) {
      std::vector<std::string> out_names;
      for (const auto& [cls, names] : by_class) {
        if (ontology.is_subclass_of(cls, root)) out_names.insert(out_names.end(), names.begin(), names.end());
      }
      return out_names;
    };
    for (std::size_t i = 0; i < config.triples_per_step && !props.empty(); ++i) {
      const PropertyDef& p = *props[i < props.size() ? i : uniform_index(rng, props.size())];
      const auto subjects = members_under(p.domain);
      const auto objects = members_under(p.range);
      if (subjects.empty() || objects.empty()) continue;
      out.baseline.add_triple({subjects[uniform_index(rng, subjects.size())], p.name,
                               objects[uniform_index(rng, objects.size())], article_id});
    }
    out.batch.push_back({article_id, out.timestamp, std::move(body)});
    return out;
  };
}

std::string summary_line(const ScenarioResult& result) {
  nlohmann::ordered_json j;
  j["summary"] = true;
  j["steps"] = result.records.size();
  j["flags"] = result.flag_count;
  j["false_positives"] = result.false_positive_count;
  j["first_flag_step"] = result.first_flag_step ? nlohmann::ordered_json(*result.first_flag_step)
                                                 : nlohmann::ordered_json(nullptr);
  return j.dump();
}

}  // namespace kgmon::sim
