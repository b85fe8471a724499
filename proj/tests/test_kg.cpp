#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kgmon/kg.hpp"
#include "support/testkit.hpp"

using namespace kgmon;
using AR = KnowledgeGraph::AddResult;

TEST_CASE("entity assertions merge and conflict deterministically") {
  KnowledgeGraph g;
  CHECK(g.add_entity({"  Acme   Corp ", "Organization", "a2"}) == AR::kAdded);
  CHECK(g.has_entity("Acme Corp"));
  CHECK(g.add_entity({"Acme Corp", "Organization", "a1"}) == AR::kMerged);
  CHECK(g.entity_map().at("Acme Corp").provenance == "a1");
  CHECK(g.add_entity({"Acme Corp", "Company", "a9"}) == AR::kConflict);
  CHECK(*g.class_of("Acme Corp") == "Company");
  CHECK(g.entity_map().at("Acme Corp").provenance == "a9");
  CHECK(g.add_entity({"Acme Corp", "Zeta", "a0"}) == AR::kConflict);
  CHECK(*g.class_of("Acme Corp") == "Company");
  CHECK(g.add_entity({"   ", "X", "a"}) == AR::kRejected);
}

TEST_CASE("triples need asserted endpoints") {
  KnowledgeGraph g;
  g.add_entity({"A", "P", "a1"});
  CHECK(g.add_triple({"A", "knows", "B", "a1"}) == AR::kRejected);
  g.add_entity({"B", "P", "a1"});
  CHECK(g.add_triple({"A", "knows", "B", "a2"}) == AR::kAdded);
  CHECK(g.add_triple({"A", "knows", "B", "a1"}) == AR::kMerged);
  CHECK(g.triple_map().begin()->second == "a1");
  CHECK(g.remove_entities([](const std::string& e, const auto&) { return e == "B"; }) == 1);
  CHECK(g.triple_count() == 0);
}

TEST_CASE("record parsing counts malformed lines and closure violations") {
  const char* doc =
      "T\tAlice\tknows\tBob\ta1\n"
      "E\tAlice\tPerson\ta1\n"
      "E\tBob\tPerson\ta1\n"
      "garbage line\n"
      "E\tonly\tthree\n"
      "T\tAlice\tknows\tCarol\ta1\n"
      "\n"
      "E\tBob\tRobot\ta2\n";
  auto r = parse_records(doc);
  CHECK(r.malformed == 2);
  REQUIRE(r.closure_violations.size() == 1);
  CHECK(r.closure_violations[0] == 6);
  CHECK(r.conflicts == 1);
  CHECK(r.graph.entity_count() == 2);
  CHECK(r.graph.triple_count() == 1);
  CHECK(*r.graph.class_of("Bob") == "Person");
}

TEST_CASE("canonical serialization is sorted and stable") {
  KnowledgeGraph g;
  g.add_entity({"b", "X", "p"});
  g.add_entity({"a", "Y", "p"});
  g.add_triple({"b", "r", "a", "p"});
  CHECK(canonical_serialize(g) == "E\ta\tY\tp\nE\tb\tX\tp\nT\tb\tr\ta\tp\n");
}

TEST_CASE("instantiation queries") {
  KnowledgeGraph g;
  g.add_entity({"x", "A", "p"});
  g.add_entity({"y", "B", "p"});
  g.add_entity({"z", "A", "p"});
  g.add_triple({"x", "r", "y", "p"});
  CHECK(instantiated_classes(g) == std::set<std::string>{"A", "B"});
  CHECK(instantiated_properties(g) == std::set<std::string>{"r"});
  auto of = entities_of_type(g, {"A"});
  REQUIRE(of.size() == 2);
  CHECK(of[0].first == "x");
  CHECK(of[1].first == "z");
}

namespace {

// Random graph over a tiny vocabulary so that merges collide often.
KnowledgeGraph dense_graph(std::mt19937_64& rng) {
  KnowledgeGraph g;
  const std::size_t n = testkit::pick(rng, 12);
  for (std::size_t i = 0; i < n; ++i) {
    g.add_entity({"e" + std::to_string(testkit::pick(rng, 8)), "C" + std::to_string(testkit::pick(rng, 3)),
                  "a" + std::to_string(testkit::pick(rng, 5))});
  }
  auto ents = g.entities();
  if (ents.empty()) return g;
  for (std::size_t i = 0; i < n; ++i) {
    g.add_triple({ents[testkit::pick(rng, ents.size())].entity, "r" + std::to_string(testkit::pick(rng, 2)),
                  ents[testkit::pick(rng, ents.size())].entity, "a" + std::to_string(testkit::pick(rng, 5))});
  }
  return g;
}

}  // namespace

TEST_CASE("property: merge is commutative and associative") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 500; ++i) {
    auto a = dense_graph(rng), b = dense_graph(rng), c = dense_graph(rng);
    REQUIRE(canonical_serialize(merge(a, b).graph) == canonical_serialize(merge(b, a).graph));
    REQUIRE(canonical_serialize(merge(merge(a, b).graph, c).graph) ==
            canonical_serialize(merge(a, merge(b, c).graph).graph));
    REQUIRE(canonical_serialize(merge(a, a).graph) == canonical_serialize(a));
  }
}

TEST_CASE("property: serialize then parse round-trips") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 500; ++i) {
    auto g = dense_graph(rng);
    auto text = canonical_serialize(g);
    auto back = parse_records(text);
    REQUIRE(back.malformed == 0);
    REQUIRE(back.closure_violations.empty());
    REQUIRE(canonical_serialize(back.graph) == text);
  }
}

TEST_CASE("property: record order does not matter") {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 200; ++i) {
    auto g = dense_graph(rng);
    const auto text = canonical_serialize(g);
    auto lines = text::lines(text);
    std::vector<std::string> v(lines.begin(), lines.end());
    std::shuffle(v.begin(), v.end(), rng);
    std::string doc;
    for (const auto& l : v) doc += l + "\n";
    REQUIRE(canonical_serialize(parse_records(doc).graph) == canonical_serialize(g));
  }
}
