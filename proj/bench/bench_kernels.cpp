// Serial reference against the OpenMP kernels on the 100-article corpus.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "kgmon/extract.hpp"
#include "kgmon/halluc.hpp"
#include "kgmon/text.hpp"

namespace {

struct Corpus {
  kgmon::Ontology ont;
  kgmon::Dictionary dict;
  kgmon::RuleSet rules;
  std::vector<kgmon::ArticleDoc> batch;
  kgmon::KnowledgeGraph graph;

  Corpus() {
    const std::filesystem::path data(KGMON_TEST_DATA);
    ont = kgmon::Ontology::load_file(data / "news.onto");
    dict = kgmon::Dictionary::load_file(data / "news.dict", ont);
    rules = kgmon::RuleSet::load_file(data / "news.rules", ont);
    const auto one = kgmon::parse_batch_records(kgmon::text::read_file(data / "corpus100.tsv"));
    // Ten renamed copies give the kernels enough work to split.
    for (int copy = 0; copy < 10; ++copy) {
      for (auto a : one) {
        a.id += "-" + std::to_string(copy);
        batch.push_back(std::move(a));
      }
    }
    graph = kgmon::build_baseline_serial(batch, dict, rules, ont).graph;
  }
};

const Corpus& corpus() {
  static const Corpus c;
  return c;
}

void BM_BuildBaselineSerial(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(kgmon::build_baseline_serial(c.batch, c.dict, c.rules, c.ont));
}

void BM_BuildBaselineParallel(benchmark::State& state) {
  const auto& c = corpus();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kgmon::build_baseline(c.batch, c.dict, c.rules, c.ont, {"", 0, workers}));
  }
}

void BM_ValidateSerial(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(kgmon::validate_graph_serial(c.graph, c.batch, c.ont));
}

void BM_ValidateParallel(benchmark::State& state) {
  const auto& c = corpus();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kgmon::validate_graph(c.graph, c.batch, c.ont, {workers}));
}

}  // namespace

BENCHMARK(BM_BuildBaselineSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildBaselineParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValidateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValidateParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
