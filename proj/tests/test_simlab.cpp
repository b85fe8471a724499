#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kgmon/halluc.hpp"
#include "kgmon/simlab.hpp"
#include "support/testkit.hpp"

using namespace kgmon;
using namespace kgmon::sim;

namespace {

const Ontology& news() {
  static const Ontology o = Ontology::load_file(testkit::data("news.onto"));
  return o;
}

KnowledgeGraph step_graph(std::size_t step = 0) {
  return synthetic_stream(news(), {})(step).baseline;
}

}  // namespace

TEST_CASE("kinds round-trip by name") {
  for (Kind k : {Kind::kDropClasses, Kind::kDropProperties, Kind::kInjectEntities, Kind::kDepthSkew,
                 Kind::kDeltaNoise}) {
    CHECK(parse_kind(kind_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_kind("melt"), Error);
}

TEST_CASE("synthetic stream instantiates every class and traces cleanly") {
  auto stream = synthetic_stream(news(), {});
  auto s = stream(3);
  CHECK(instantiated_classes(s.baseline).size() == news().class_count());
  CHECK(s.timestamp == 4);
  CHECK(validate_graph_serial(s.baseline, s.batch, news()).hallucinated == 0);
  CHECK(canonical_serialize(stream(3).baseline) == canonical_serialize(s.baseline));
  CHECK(canonical_serialize(stream(4).baseline) != canonical_serialize(s.baseline));
}

TEST_CASE("drop-classes removes exactly k instantiated classes") {
  auto g = step_graph();
  for (int k = 1; k <= 10; ++k) {
    auto p = perturb(g, {Kind::kDropClasses, double(k), 17}, news());
    CHECK(instantiated_classes(p).size() == 10u - k);
    for (const auto& [key, prov] : p.triple_map()) {
      CHECK(p.has_entity(key.subject));
      CHECK(p.has_entity(key.object));
    }
  }
  CHECK_THROWS_AS(perturb(g, {Kind::kDropClasses, 11, 1}, news()), Error);
  CHECK_THROWS_AS(perturb(g, {Kind::kDropClasses, 1.5, 1}, news()), Error);
}

TEST_CASE("drop-properties removes exactly k instantiated properties") {
  auto g = step_graph();
  const auto before = instantiated_properties(g).size();
  auto p = perturb(g, {Kind::kDropProperties, 2, 5}, news());
  CHECK(instantiated_properties(p).size() == before - 2);
  CHECK(p.entity_count() == g.entity_count());
}

TEST_CASE("inject-entities adds unsourced synthetic entities deterministically") {
  auto s = synthetic_stream(news(), {})(0);
  auto p = perturb(s.baseline, {Kind::kInjectEntities, 4, 9}, news());
  CHECK(p.entity_count() == s.baseline.entity_count() + 4);
  CHECK(p.has_entity("##synthetic-9-0"));
  CHECK(canonical_serialize(p) == canonical_serialize(perturb(s.baseline, {Kind::kInjectEntities, 4, 9}, news())));
  auto r = validate_graph_serial(p, s.batch, news());
  CHECK(r.per_stage[1] == 4);
}

TEST_CASE("depth-skew moves root entities to their deepest descendant") {
  KnowledgeGraph g;
  for (int i = 0; i < 10; ++i) g.add_entity({"a" + std::to_string(i), "Agent", "p"});
  g.add_entity({"e", "Event", "p"});  // root without descendants
  auto p = perturb(g, {Kind::kDepthSkew, 0.5, 3}, news());
  int moved = 0;
  for (const auto& [e, info] : p.entity_map()) moved += info.cls == "Company";
  CHECK(moved == 5);
  CHECK(*p.class_of("e") == "Event");
  CHECK(canonical_serialize(perturb(g, {Kind::kDepthSkew, 0, 3}, news())) == canonical_serialize(g));
  KnowledgeGraph only_event;
  only_event.add_entity({"e", "Event", "p"});
  CHECK_THROWS_AS(perturb(only_event, {Kind::kDepthSkew, 0.5, 3}, news()), Error);
}

TEST_CASE("schedule parsing") {
  auto s = parse_schedule("# demo\n20\tdrop-classes\t3\t7\n20\tdelta-noise\t0.1\t1\nASSERT_FLAG_AT 20\n");
  REQUIRE(s.entries.at(20).size() == 2);
  CHECK(s.entries.at(20)[0].kind == Kind::kDropClasses);
  CHECK(s.assert_flag_at == std::vector<std::size_t>{20});
  try {
    parse_schedule("1\tdrop-classes\t3\t7\n2\tmelt\t1\t1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_schedule("3\tdepth-skew\t1.5\t1\n"), ParseError);
}

TEST_CASE("scenario flags a scheduled step change and counts false positives") {
  ScenarioConfig cfg;
  cfg.noise_sigma = 0.02;
  cfg.noise_seed = 4;
  auto sched = parse_schedule("20\tdrop-classes\t6\t1\n");
  auto r = run_scenario(synthetic_stream(news(), {}), 50, sched, news(), cfg);
  CHECK(r.records.size() == 50);
  REQUIRE(r.first_flag_step.has_value());
  CHECK(*r.first_flag_step == 20);
  CHECK(r.records[20].flagged);
  CHECK(r.records[20].delta.d_icr >= 0.5);
  CHECK(r.flag_count >= 1);
  CHECK(r.false_positive_count == r.flag_count - 1);
  CHECK_FALSE(r.records[0].threshold.has_value());
  CHECK(r.records[5].threshold.has_value());
}

TEST_CASE("scenario is reproducible and validates its inputs") {
  ScenarioConfig cfg;
  cfg.noise_sigma = 0.05;
  cfg.noise_seed = 10;
  auto a = run_scenario(synthetic_stream(news(), {}), 30, {}, news(), cfg);
  auto b = run_scenario(synthetic_stream(news(), {}), 30, {}, news(), cfg);
  CHECK(a.records == b.records);
  for (const auto& rec : a.records) {
    CHECK(rec.delta.d_icr >= 0);
    CHECK(rec.delta.d_icr <= 1);
  }
  CHECK_FALSE(a.first_flag_step.has_value());
  CHECK_THROWS_AS(run_scenario(synthetic_stream(news(), {}), 5, {}, news(), cfg), Error);
  Schedule twice;
  twice.entries[7] = {{Kind::kDropClasses, 10, 1}, {Kind::kDropClasses, 1, 1}};
  CHECK_THROWS_WITH_AS(run_scenario(synthetic_stream(news(), {}), 10, twice, news(), cfg),
                       doctest::Contains("step 7"), Error);
}

TEST_CASE("summary line") {
  ScenarioResult r;
  r.records.resize(3);
  r.flag_count = 1;
  r.first_flag_step = 2;
  CHECK(summary_line(r) == R"({"summary":true,"steps":3,"flags":1,"false_positives":0,"first_flag_step":2})");
}
