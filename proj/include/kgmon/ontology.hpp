#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgmon/error.hpp"

namespace kgmon {

struct ClassDef {
  std::string name;
  std::optional<std::string> parent;
};

struct PropertyDef {
  std::string name;
  std::string domain;
  std::string range;
};

class OntologyError : public Error {
 public:
  using Error::Error;
};

/// Schema of classes (a single-parent subclass forest), properties with
/// domain/range, and the NER-tag to class mapping.
///
/// Permissible relations are induced from property domain/range and inherit
/// down the subclass hierarchy. Immutable once loaded.
class Ontology {
 public:
  template <typename V>
  using NameMap = std::map<std::string, V, std::less<>>;

  Ontology() = default;

  /// Parses the line-oriented ontology format. Throws ParseError for
  /// malformed lines, duplicates, unknown references; OntologyError for
  /// subclass cycles.
  static Ontology parse(std::string_view document);
  static Ontology load_file(const std::filesystem::path& path);

  std::size_t class_count() const noexcept { return classes_.size(); }
  std::size_t property_count() const noexcept { return properties_.size(); }

  bool has_class(std::string_view name) const;
  bool has_property(std::string_view name) const;

  const ClassDef& class_def(std::string_view name) const;
  const PropertyDef& property(std::string_view name) const;

  /// Subclass-of edges from `cls` to its root; roots are 0.
  int depth(std::string_view cls) const;

  /// Reflexive, transitive subclass test.
  bool is_subclass_of(std::string_view cls, std::string_view ancestor) const;

  bool is_permissible(std::string_view subject_class, std::string_view property,
                      std::string_view object_class) const;

  /// Class an NER tag maps to, if the tag is declared.
  std::optional<std::string> resolve_tag(std::string_view tag) const;

  /// Deepest class in the subtree under `cls` (itself when a leaf); ties
  /// go to the lexicographically smallest name.
  const std::string& deepest_descendant(std::string_view cls) const;

  const NameMap<ClassDef>& classes() const noexcept { return classes_; }
  const NameMap<PropertyDef>& properties() const noexcept { return properties_; }
  const NameMap<std::string>& ner_map() const noexcept { return ner_map_; }

  /// The document this ontology was parsed from, verbatim.
  const std::string& source_text() const noexcept { return source_; }

  /// Sorted dump of classes (with depth), properties and tag map.
  std::string canonical_dump() const;

 private:
  NameMap<ClassDef> classes_;
  NameMap<PropertyDef> properties_;
  NameMap<std::string> ner_map_;
  NameMap<int> depth_;
  NameMap<std::string> deepest_;
  std::string source_;
};

}  // namespace kgmon
