#include "kgmon/kg.hpp"

#include <algorithm>

#include "kgmon/text.hpp"

namespace kgmon {

namespace {

bool valid_token(std::string_view s) { return !s.empty() && !text::contains_space(s); }

}  // namespace

KnowledgeGraph::AddResult KnowledgeGraph::add_entity(EntityAssertion a) {
  a.entity = text::normalize_surface(a.entity);
  if (a.entity.empty()) return AddResult::kRejected;
  auto it = entities_.find(a.entity);
  if (it == entities_.end()) {
    entities_.emplace(std::move(a.entity), EntityInfo{std::move(a.cls), std::move(a.provenance)});
    return AddResult::kAdded;
  }
  EntityInfo& cur = it->second;
  if (cur.cls == a.cls) {
    if (a.provenance < cur.provenance) cur.provenance = std::move(a.provenance);
    return AddResult::kMerged;
  }
  if (a.cls < cur.cls) cur = EntityInfo{std::move(a.cls), std::move(a.provenance)};
  return AddResult::kConflict;
}

KnowledgeGraph::AddResult KnowledgeGraph::add_triple(TripleAssertion t) {
  t.subject = text::normalize_surface(t.subject);
  t.object = text::normalize_surface(t.object);
  if (!has_entity(t.subject) || !has_entity(t.object)) return AddResult::kRejected;
  TripleKey key{std::move(t.subject), std::move(t.predicate), std::move(t.object)};
  auto [it, inserted] = triples_.try_emplace(std::move(key), t.provenance);
  if (inserted) return AddResult::kAdded;
  if (t.provenance < it->second) it->second = std::move(t.provenance);
  return AddResult::kMerged;
}

bool KnowledgeGraph::has_entity(std::string_view entity) const { return entities_.find(entity) != entities_.end(); }

const std::string* KnowledgeGraph::class_of(std::string_view entity) const {
  auto it = entities_.find(entity);
  return it == entities_.end() ? nullptr : &it->second.cls;
}

std::vector<EntityAssertion> KnowledgeGraph::entities() const {
  std::vector<EntityAssertion> out;
  out.reserve(entities_.size());
  for (const auto& [e, info] : entities_) out.push_back({e, info.cls, info.provenance});
  return out;
}

std::vector<TripleAssertion> KnowledgeGraph::triples() const {
  std::vector<TripleAssertion> out;
  out.reserve(triples_.size());
  for (const auto& [k, prov] : triples_) out.push_back({k.subject, k.predicate, k.object, prov});
  return out;
}

std::size_t KnowledgeGraph::remove_entities(
    const std::function<bool(const std::string&, const EntityInfo&)>& pred) {
  std::set<std::string, std::less<>> removed;
  for (auto it = entities_.begin(); it != entities_.end();) {
    if (pred(it->first, it->second)) {
      removed.insert(it->first);
      it = entities_.erase(it);
    } else {
      ++it;
    }
  }
  if (!removed.empty()) {
    std::erase_if(triples_, [&](const auto& kv) {
      return removed.count(kv.first.subject) > 0 || removed.count(kv.first.object) > 0;
    });
  }
  return removed.size();
}

std::size_t KnowledgeGraph::remove_triples(const std::function<bool(const TripleKey&)>& pred) {
  return std::erase_if(triples_, [&](const auto& kv) { return pred(kv.first); });
}

void KnowledgeGraph::set_class(std::string_view entity, std::string cls) {
  auto it = entities_.find(entity);
  if (it != entities_.end()) it->second.cls = std::move(cls);
}

void KnowledgeGraph::set_all_provenance(const std::string& provenance) {
  for (auto& [e, info] : entities_) info.provenance = provenance;
  for (auto& [k, prov] : triples_) prov = provenance;
}

ParseResult parse_records(std::string_view input) {
  ParseResult result;
  struct PendingTriple {
    std::size_t line;
    TripleAssertion triple;
  };
  std::vector<PendingTriple> pending;

  auto all = text::lines(input);
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::string_view line = all[i];
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (f[0] == "E" && f.size() == 4) {
      auto cls = text::trim(f[2]);
      auto prov = text::trim(f[3]);
      std::string entity = text::normalize_surface(f[1]);
      if (!entity.empty() && valid_token(cls) && valid_token(prov)) {
        auto r = result.graph.add_entity({std::move(entity), std::string(cls), std::string(prov)});
        if (r == KnowledgeGraph::AddResult::kConflict) ++result.conflicts;
        continue;
      }
    } else if (f[0] == "T" && f.size() == 5) {
      auto pred = text::trim(f[2]);
      auto prov = text::trim(f[4]);
      std::string s = text::normalize_surface(f[1]);
      std::string o = text::normalize_surface(f[3]);
      if (!s.empty() && !o.empty() && valid_token(pred) && valid_token(prov)) {
        pending.push_back({i + 1, {std::move(s), std::string(pred), std::move(o), std::string(prov)}});
        continue;
      }
    }
    ++result.malformed;
  }

  // Triples resolve against the whole entity set, so record order in the
  // file does not matter.
  for (auto& p : pending) {
    if (result.graph.add_triple(std::move(p.triple)) == KnowledgeGraph::AddResult::kRejected) {
      result.closure_violations.push_back(p.line);
    }
  }
  return result;
}

MergeResult merge(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  MergeResult out;
  out.graph = a;
  for (const auto& [e, info] : b.entity_map()) {
    if (out.graph.add_entity({e, info.cls, info.provenance}) == KnowledgeGraph::AddResult::kConflict) {
      ++out.conflicts;
    }
  }
  for (const auto& [k, prov] : b.triple_map()) {
    out.graph.add_triple({k.subject, k.predicate, k.object, prov});
  }
  if (a.batch_id.empty() || b.batch_id.empty()) {
    out.graph.batch_id = a.batch_id.empty() ? b.batch_id : a.batch_id;
  } else {
    out.graph.batch_id = std::min(a.batch_id, b.batch_id);
  }
  out.graph.timestamp = std::max(a.timestamp, b.timestamp);
  return out;
}

std::set<std::string> instantiated_classes(const KnowledgeGraph& g) {
  std::set<std::string> out;
  for (const auto& [e, info] : g.entity_map()) out.insert(info.cls);
  return out;
}

std::set<std::string> instantiated_properties(const KnowledgeGraph& g) {
  std::set<std::string> out;
  for (const auto& [k, prov] : g.triple_map()) out.insert(k.predicate);
  return out;
}

std::vector<std::pair<std::string, std::string>> entities_of_type(const KnowledgeGraph& g,
                                                                   const std::set<std::string>& filter) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [e, info] : g.entity_map()) {
    if (filter.count(info.cls)) out.emplace_back(e, info.cls);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_entity_record(const EntityAssertion& a) {
  return "E\t" + a.entity + '\t' + a.cls + '\t' + a.provenance;
}

std::string format_triple_record(const TripleAssertion& t) {
  return "T\t" + t.subject + '\t' + t.predicate + '\t' + t.object + '\t' + t.provenance;
}

std::string canonical_serialize(const KnowledgeGraph& g) {
  std::vector<std::string> e_lines;
  std::vector<std::string> t_lines;
  e_lines.reserve(g.entity_count());
  t_lines.reserve(g.triple_count());
  for (const auto& a : g.entities()) e_lines.push_back(format_entity_record(a));
  for (const auto& t : g.triples()) t_lines.push_back(format_triple_record(t));
  std::sort(e_lines.begin(), e_lines.end());
  std::sort(t_lines.begin(), t_lines.end());
  std::string out;
  for (const auto& l : e_lines) out += l + '\n';
  for (const auto& l : t_lines) out += l + '\n';
  return out;
}

}  // namespace kgmon
