#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "kgmon/extract.hpp"
#include "support/testkit.hpp"

using namespace kgmon;

namespace {

struct People {
  Ontology ont = Ontology::load_file(testkit::data("people.onto"));
  Dictionary dict = Dictionary::load_file(testkit::data("people.dict"), ont);
  RuleSet rules = RuleSet::load_file(testkit::data("people.rules"), ont);
  std::vector<ArticleDoc> batch = parse_batch_records(testkit::read("people_batch.tsv"));
};

}  // namespace

TEST_CASE("tokenizer splits punctuation and keeps offsets") {
  auto t = tokenize("Globex, headquartered in  New-York.");
  std::vector<std::string> texts;
  for (const auto& x : t) texts.push_back(x.text);
  CHECK(texts == std::vector<std::string>{"Globex", ",", "headquartered", "in", "New", "-", "York", "."});
  CHECK(t[1].offset == 6);
  CHECK(t[4].offset == 26);
}

TEST_CASE("batch records unescape and round-trip") {
  ArticleDoc d{"x1", 5, "line one\nline\ttwo \\ end"};
  auto back = parse_batch_records(format_batch_record(d) + "\n");
  REQUIRE(back.size() == 1);
  CHECK(back[0].text == d.text);
  CHECK(back[0].published_at == 5);
  CHECK_THROWS_AS(parse_batch_records("a\tnotanumber\ttext\n"), ParseError);
  CHECK_THROWS_AS(parse_batch_records("a\t1\n"), ParseError);
}

TEST_CASE("dictionary NER prefers the longest match") {
  People p;
  auto toks = tokenize("In New  York and York, Alice Smith met Bob.");
  auto m = dict_ner(toks, p.dict);
  REQUIRE(m.size() == 4);
  CHECK(m[0].surface == "New York");
  CHECK(m[0].cls == "Location");
  CHECK(m[1].surface == "York");
  CHECK(m[2].surface == "Alice Smith");
  CHECK(m[3].surface == "Bob");
  CHECK(dict_ner(tokenize("alice smith"), p.dict).empty());
}

TEST_CASE("dictionary rejects a surface with two classes") {
  auto ont = Ontology::load_file(testkit::data("people.onto"));
  CHECK_THROWS_AS(Dictionary::parse("Paris\tLocation\nParis\tPerson\n", ont), Error);
  CHECK_THROWS_AS(Dictionary::parse("Paris\tNowhere\n", ont), ParseError);
}

TEST_CASE("rule loading validates and drops impermissible rules") {
  auto ont = Ontology::load_file(testkit::data("news.onto"));
  auto rs = RuleSet::load_file(testkit::data("news.rules"), ont);
  REQUIRE(rs.diagnostics.size() == 1);
  CHECK(rs.diagnostics[0].find("n7") != std::string::npos);
  for (const auto& r : rs.rules) CHECK(r.rule_id != "n7");
  CHECK_THROWS_AS(RuleSet::parse("x\t{subject:Person} likes Paris\tworksFor\n", ont), ParseError);
  CHECK_THROWS_AS(RuleSet::parse("x\t{subject:Person} at {object:Ghost}\tworksFor\n", ont), ParseError);
  CHECK_THROWS_AS(RuleSet::parse("x\t{subject:Person} at {object:Company}\tnope\n", ont), ParseError);
}

TEST_CASE("people batch yields the hand-derived baseline") {
  People p;
  auto r = build_baseline_serial(p.batch, p.dict, p.rules, p.ont, {"b1", 9, 1});
  const char* want =
      "E\tAcme Corp\tOrganization\ta1\n"
      "E\tAlice Smith\tPerson\ta1\n"
      "E\tBob\tPerson\ta2\n"
      "E\tGlobex\tOrganization\ta2\n"
      "E\tNew York\tLocation\ta2\n"
      "E\tParis\tLocation\ta1\n"
      "E\tYork\tLocation\ta3\n"
      "T\tAcme Corp\tlocatedIn\tParis\ta1\n"
      "T\tAlice Smith\tworksFor\tAcme Corp\ta1\n"
      "T\tBob\tworksFor\tGlobex\ta2\n"
      "T\tGlobex\tlocatedIn\tNew York\ta2\n";
  CHECK(canonical_serialize(r.graph) == want);
  CHECK(r.graph.batch_id == "b1");
  CHECK(r.graph.timestamp == 9);
}

TEST_CASE("subclass entities fill superclass slots") {
  auto ont = Ontology::load_file(testkit::data("news.onto"));
  auto dict = Dictionary::parse("Ann\tEmployee\nInitech\tCompany\n", ont);
  auto rules = RuleSet::parse("r\t{subject:Person} works for {object:Organization}\tworksFor\n", ont);
  auto ex = extract_article({"z", 0, "Ann WORKS for Initech."}, dict, rules, ont);
  REQUIRE(ex.fragment.triple_count() == 1);
  CHECK(ex.fragment.triple_map().begin()->first.subject == "Ann");
}

TEST_CASE("rules do not cross sentence boundaries") {
  People p;
  auto ex = extract_article({"z", 0, "Bob works. for Globex"}, p.dict, p.rules, p.ont);
  CHECK(ex.fragment.triple_count() == 0);
  CHECK(ex.fragment.entity_count() == 2);
}

TEST_CASE("duplicate article ids are rejected") {
  People p;
  std::vector<ArticleDoc> b{{"a", 0, "Bob"}, {"a", 1, "Bob"}};
  CHECK_THROWS_AS(build_baseline(b, p.dict, p.rules, p.ont), Error);
  CHECK_THROWS_AS(build_baseline_serial(b, p.dict, p.rules, p.ont), Error);
}

TEST_CASE("directory batches use file stems in name order") {
  auto dir = std::filesystem::temp_directory_path() / "kgmon_extract_dir";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "b.txt") << "Bob works for Globex.";
  std::ofstream(dir / "a.txt") << "Alice Smith";
  std::ofstream(dir / "skip.md") << "x";
  auto docs = load_batch_directory(dir);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "a");
  CHECK(docs[1].id == "b");
  std::filesystem::remove_all(dir);
}

TEST_CASE("parallel baseline equals the serial reference on the corpus") {
  auto ont = Ontology::load_file(testkit::data("news.onto"));
  auto dict = Dictionary::load_file(testkit::data("news.dict"), ont);
  auto rules = RuleSet::load_file(testkit::data("news.rules"), ont);
  auto batch = parse_batch_records(testkit::read("corpus100.tsv"));
  auto ref = canonical_serialize(build_baseline_serial(batch, dict, rules, ont).graph);
  CHECK(ref.find("\nT\t") != std::string::npos);
  for (int w : {1, 2, 3, 8}) {
    CHECK(canonical_serialize(build_baseline(batch, dict, rules, ont, {"", 0, w}).graph) == ref);
  }
}

namespace {

// Sentences assembled from known pieces; the generator records every triple
// it plants so the expected output never depends on the matcher.
struct Planted {
  std::string text;
  std::set<std::tuple<std::string, std::string, std::string>> triples;
  std::set<std::string> entities;
};

Planted plant(std::mt19937_64& rng) {
  const std::vector<std::string> persons{"Alice Smith", "Bob"};
  const std::vector<std::string> orgs{"Acme Corp", "Globex"};
  const std::vector<std::string> locs{"Paris", "New York", "York"};
  const std::vector<std::string> filler{"markets", "were", "calm", "today", "quietly", "reported"};
  Planted p;
  const std::size_t n = 1 + testkit::pick(rng, 6);
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    switch (testkit::pick(rng, 5)) {
      case 0: {
        auto a = persons[testkit::pick(rng, 2)], b = orgs[testkit::pick(rng, 2)];
        s = a + (testkit::pick(rng, 2) ? " works FOR " : " joined ") + b;
        p.triples.insert({a, "worksFor", b});
        p.entities.insert(a);
        p.entities.insert(b);
        break;
      }
      case 1: {
        auto a = orgs[testkit::pick(rng, 2)], b = locs[testkit::pick(rng, 3)];
        s = a + (testkit::pick(rng, 2) ? " is based in " : ", headquartered in ") + b;
        p.triples.insert({a, "locatedIn", b});
        p.entities.insert(a);
        p.entities.insert(b);
        break;
      }
      case 2: {
        auto a = persons[testkit::pick(rng, 2)], b = locs[testkit::pick(rng, 3)];
        s = a + " works for " + b;  // slot class mismatch: no triple
        p.entities.insert(a);
        p.entities.insert(b);
        break;
      }
      default:
        s = filler[testkit::pick(rng, filler.size())] + " " + filler[testkit::pick(rng, filler.size())];
    }
    p.text += s + (testkit::pick(rng, 2) ? ". " : "! ");
  }
  return p;
}

}  // namespace

TEST_CASE("property: extraction recovers exactly the planted triples") {
  People p;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    auto planted = plant(rng);
    auto ex = extract_article({"g", 0, planted.text}, p.dict, p.rules, p.ont);
    std::set<std::tuple<std::string, std::string, std::string>> got;
    for (const auto& [k, prov] : ex.fragment.triple_map()) got.insert({k.subject, k.predicate, k.object});
    REQUIRE_MESSAGE(got == planted.triples, planted.text);
    std::set<std::string> ents;
    for (const auto& [e, info] : ex.fragment.entity_map()) ents.insert(e);
    REQUIRE(ents == planted.entities);
  }
}

TEST_CASE("property: adding a dictionary entry preserves matches before its first occurrence") {
  auto ont = Ontology::load_file(testkit::data("people.onto"));
  const std::vector<std::string> words{"Bob", "Acme", "Corp", "New", "York", "Paris", "x", "y", "Globex"};
  const std::vector<std::string> classes{"Person", "Organization", "Location"};
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<DictionaryEntry> entries;
    std::set<std::string> used;
    const std::size_t ne = testkit::pick(rng, 5);
    for (std::size_t k = 0; k < ne; ++k) {
      std::string s = words[testkit::pick(rng, words.size())];
      if (testkit::pick(rng, 2)) s += " " + words[testkit::pick(rng, words.size())];
      if (used.insert(s).second) entries.push_back({s, classes[testkit::pick(rng, 3)]});
    }
    std::string extra = words[testkit::pick(rng, words.size())];
    if (testkit::pick(rng, 2)) extra += " " + words[testkit::pick(rng, words.size())];
    if (used.count(extra)) continue;

    std::string doc;
    for (std::size_t k = 0; k < 20; ++k) doc += words[testkit::pick(rng, words.size())] + " ";
    auto toks = tokenize(doc);

    auto extra_toks = tokenize(extra);
    std::size_t first_occ = toks.size();
    for (std::size_t s = 0; s + extra_toks.size() <= toks.size() && first_occ == toks.size(); ++s) {
      bool ok = true;
      for (std::size_t k = 0; k < extra_toks.size() && ok; ++k) ok = toks[s + k].text == extra_toks[k].text;
      if (ok) first_occ = s;
    }

    auto before = dict_ner(toks, Dictionary(entries, ont));
    entries.push_back({extra, classes[testkit::pick(rng, 3)]});
    auto after = dict_ner(toks, Dictionary(entries, ont));
    for (const auto& m : before) {
      if (m.first_token >= first_occ) continue;
      REQUIRE(std::find(after.begin(), after.end(), m) != after.end());
    }
  }
}
