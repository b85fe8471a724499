#include "kgmon/ontology.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "kgmon/error.hpp"
#include "kgmon/text.hpp"

namespace kgmon {

namespace {

struct PendingRef {
  std::size_t line;
  std::string name;
};

}  // namespace

Ontology Ontology::parse(std::string_view document) {
  Ontology ont;
  ont.source_ = std::string(document);

  NameMap<std::size_t> class_line;
  std::vector<std::pair<std::size_t, std::string>> parent_refs;  // line, child
  std::vector<std::pair<std::size_t, std::string>> property_refs;
  std::vector<std::pair<std::size_t, std::string>> tag_refs;

  auto all = text::lines(document);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::size_t lineno = i + 1;
    std::string_view line = all[i];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tok = text::split_ws(line);
    if (tok.empty()) continue;

    if (tok[0] == "CLASS" && (tok.size() == 2 || (tok.size() == 4 && tok[2] == "SUBCLASS_OF"))) {
      ClassDef def{std::string(tok[1]), std::nullopt};
      if (tok.size() == 4) def.parent = std::string(tok[3]);
      if (ont.classes_.count(def.name)) throw ParseError(lineno, "duplicate class " + def.name);
      if (def.parent) parent_refs.emplace_back(lineno, def.name);
      class_line.emplace(def.name, lineno);
      ont.classes_.emplace(def.name, std::move(def));
    } else if (tok[0] == "PROPERTY" && tok.size() == 6 && tok[2] == "DOMAIN" && tok[4] == "RANGE") {
      PropertyDef def{std::string(tok[1]), std::string(tok[3]), std::string(tok[5])};
      if (ont.properties_.count(def.name)) throw ParseError(lineno, "duplicate property " + def.name);
      property_refs.emplace_back(lineno, def.name);
      ont.properties_.emplace(def.name, std::move(def));
    } else if (tok[0] == "NERMAP" && tok.size() == 3) {
      std::string tag(tok[1]);
      if (ont.ner_map_.count(tag)) throw ParseError(lineno, "duplicate NERMAP tag " + tag);
      tag_refs.emplace_back(lineno, tag);
      ont.ner_map_.emplace(std::move(tag), std::string(tok[2]));
    } else {
      throw ParseError(lineno, "malformed ontology line: " + std::string(all[i]));
    }
  }

  // References may point forward, so resolve after the whole file is read.
  for (const auto& [lineno, child] : parent_refs) {
    const auto& parent = *ont.classes_.at(child).parent;
    if (!ont.classes_.count(parent)) {
      throw ParseError(lineno, "class " + child + " has unknown parent " + parent);
    }
  }
  for (const auto& [lineno, name] : property_refs) {
    const auto& p = ont.properties_.at(name);
    if (!ont.classes_.count(p.domain)) throw ParseError(lineno, "property " + name + " has unknown domain " + p.domain);
    if (!ont.classes_.count(p.range)) throw ParseError(lineno, "property " + name + " has unknown range " + p.range);
  }
  for (const auto& [lineno, tag] : tag_refs) {
    const auto& target = ont.ner_map_.at(tag);
    if (!ont.classes_.count(target)) throw ParseError(lineno, "NERMAP " + tag + " targets unknown class " + target);
  }

  // Cycle detection: walk each parent chain; revisiting a node already on
  // the current path closes a cycle.
  NameMap<int> state;  // 0 unvisited, 1 on path, 2 done
  for (const auto& [name, def] : ont.classes_) {
    std::vector<std::string> path;
    std::string cur = name;
    while (true) {
      int& st = state[cur];
      if (st == 2) break;
      if (st == 1) {
        auto start = std::find(path.begin(), path.end(), cur);
        std::vector<std::string> cycle(start, path.end());
        std::sort(cycle.begin(), cycle.end());
        std::string names;
        for (const auto& c : cycle) names += (names.empty() ? "" : ",") + c;
        throw OntologyError("subclass cycle: " + names);
      }
      st = 1;
      path.push_back(cur);
      const auto& parent = ont.classes_.at(cur).parent;
      if (!parent) break;
      cur = *parent;
    }
    for (const auto& p : path) state[p] = 2;
  }

  for (const auto& [name, def] : ont.classes_) {
    int d = 0;
    for (const auto* c = &def; c->parent; c = &ont.classes_.at(*c->parent)) ++d;
    ont.depth_.emplace(name, d);
  }

  for (const auto& [name, def] : ont.classes_) {
    // Every class offers itself as a candidate to all of its ancestors.
    const int d = ont.depth_.at(name);
    for (const ClassDef* c = &def;; c = &ont.classes_.at(*c->parent)) {
      auto it = ont.deepest_.find(c->name);
      if (it == ont.deepest_.end()) {
        ont.deepest_.emplace(c->name, name);
      } else {
        const int best = ont.depth_.at(it->second);
        if (d > best || (d == best && name < it->second)) it->second = name;
      }
      if (!c->parent) break;
    }
  }
  return ont;
}

Ontology Ontology::load_file(const std::filesystem::path& path) { return parse(text::read_file(path)); }

bool Ontology::has_class(std::string_view name) const { return classes_.find(name) != classes_.end(); }

bool Ontology::has_property(std::string_view name) const {
  return properties_.find(name) != properties_.end();
}

const ClassDef& Ontology::class_def(std::string_view name) const {
  auto it = classes_.find(name);
  if (it == classes_.end()) throw OntologyError("unknown class " + std::string(name));
  return it->second;
}

const PropertyDef& Ontology::property(std::string_view name) const {
  auto it = properties_.find(name);
  if (it == properties_.end()) throw OntologyError("unknown property " + std::string(name));
  return it->second;
}

int Ontology::depth(std::string_view cls) const {
  auto it = depth_.find(cls);
  if (it == depth_.end()) throw OntologyError("unknown class " + std::string(cls));
  return it->second;
}

bool Ontology::is_subclass_of(std::string_view cls, std::string_view ancestor) const {
  class_def(ancestor);
  for (const ClassDef* c = &class_def(cls);; c = &classes_.at(*c->parent)) {
    if (c->name == ancestor) return true;
    if (!c->parent) return false;
  }
}

bool Ontology::is_permissible(std::string_view subject_class, std::string_view prop,
                              std::string_view object_class) const {
  auto it = properties_.find(prop);
  if (it == properties_.end()) return false;
  return is_subclass_of(subject_class, it->second.domain) && is_subclass_of(object_class, it->second.range);
}

std::optional<std::string> Ontology::resolve_tag(std::string_view tag) const {
  auto it = ner_map_.find(tag);
  if (it == ner_map_.end()) return std::nullopt;
  return it->second;
}

const std::string& Ontology::deepest_descendant(std::string_view cls) const {
  auto it = deepest_.find(cls);
  if (it == deepest_.end()) throw OntologyError("unknown class " + std::string(cls));
  return it->second;
}

std::string Ontology::canonical_dump() const {
  std::ostringstream out;
  for (const auto& [name, def] : classes_) {
    out << "CLASS " << name << " depth=" << depth_.at(name);
    if (def.parent) out << " parent=" << *def.parent;
    out << '\n';
  }
  for (const auto& [name, p] : properties_) {
    out << "PROPERTY " << name << ' ' << p.domain << ' ' << p.range << '\n';
  }
  for (const auto& [tag, cls] : ner_map_) out << "NERMAP " << tag << ' ' << cls << '\n';
  return out.str();
}

}  // namespace kgmon
