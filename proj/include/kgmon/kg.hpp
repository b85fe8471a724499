#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgmon {

struct EntityAssertion {
  std::string entity;
  std::string cls;
  std::string provenance;

  auto operator<=>(const EntityAssertion&) const = default;
};

struct TripleAssertion {
  std::string subject;
  std::string predicate;
  std::string object;
  std::string provenance;

  auto operator<=>(const TripleAssertion&) const = default;
};

struct TripleKey {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const TripleKey&) const = default;
};

/// Typed entities plus subject-predicate-object triples, each carrying the
/// article it came from.
///
/// Invariants kept by every mutator: one class per entity, no duplicate
/// entities or triples, and every triple endpoint is an asserted entity.
/// Duplicate assertions keep the smallest provenance; conflicting class
/// assertions keep the smallest class name.
class KnowledgeGraph {
 public:
  struct EntityInfo {
    std::string cls;
    std::string provenance;
  };
  using EntityMap = std::map<std::string, EntityInfo, std::less<>>;
  using TripleMap = std::map<TripleKey, std::string>;

  enum class AddResult { kAdded, kMerged, kConflict, kRejected };

  /// Entity id is normalized first. Empty ids are rejected.
  AddResult add_entity(EntityAssertion a);

  /// Rejected when either endpoint is not an asserted entity.
  AddResult add_triple(TripleAssertion t);

  bool has_entity(std::string_view entity) const;
  const std::string* class_of(std::string_view entity) const;

  std::size_t entity_count() const noexcept { return entities_.size(); }
  std::size_t triple_count() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return entities_.empty() && triples_.empty(); }

  const EntityMap& entity_map() const noexcept { return entities_; }
  const TripleMap& triple_map() const noexcept { return triples_; }

  std::vector<EntityAssertion> entities() const;
  std::vector<TripleAssertion> triples() const;

  /// Drops matching entities together with their incident triples.
  std::size_t remove_entities(const std::function<bool(const std::string&, const EntityInfo&)>& pred);
  std::size_t remove_triples(const std::function<bool(const TripleKey&)>& pred);

  void set_class(std::string_view entity, std::string cls);
  void set_all_provenance(const std::string& provenance);

  std::string batch_id;
  std::int64_t timestamp = 0;

 private:
  EntityMap entities_;
  TripleMap triples_;
};

struct ParseResult {
  KnowledgeGraph graph;
  std::size_t malformed = 0;
  std::vector<std::size_t> closure_violations;  // 1-based line numbers
  std::size_t conflicts = 0;
};

/// Parses E/T record text. Malformed lines are skipped and counted; a
/// triple whose endpoints have no E record anywhere in the text is dropped
/// and its line recorded as a closure violation.
ParseResult parse_records(std::string_view text);

struct MergeResult {
  KnowledgeGraph graph;
  std::size_t conflicts = 0;
};

/// Set union. Commutative and associative up to canonical bytes.
MergeResult merge(const KnowledgeGraph& a, const KnowledgeGraph& b);

std::set<std::string> instantiated_classes(const KnowledgeGraph& g);
std::set<std::string> instantiated_properties(const KnowledgeGraph& g);

/// Assertions whose class is in `filter`, sorted by (entity, class).
std::vector<std::pair<std::string, std::string>> entities_of_type(const KnowledgeGraph& g,
                                                                   const std::set<std::string>& filter);

/// Sorted E lines, then sorted T lines, LF-terminated.
std::string canonical_serialize(const KnowledgeGraph& g);

std::string format_entity_record(const EntityAssertion& a);
std::string format_triple_record(const TripleAssertion& t);

}  // namespace kgmon
