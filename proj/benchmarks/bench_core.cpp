#include <benchmark/benchmark.h>

#include <random>

#include "matforge/kg.hpp"
#include "matforge/marker_codec.hpp"
#include "matforge/ner_eval.hpp"
#include "matforge/schema.hpp"

using namespace matforge;

namespace {

const EntitySchema& schema() {
  static const EntitySchema s = load_schema_file(std::string(MATFORGE_DATA_DIR) + "/schemas/materials.json");
  return s;
}

// ASCII text of `words` words with every third word highlighted.
AnnotatedDoc make_doc(std::size_t words) {
  static const char* pool[] = {"Al2O3", "films", "were", "deposited", "on", "glass", "rutile", "TiO2", "nano"};
  static const char* symbols[] = {"MAT", "DSC", "SPL", "APL"};
  AnnotatedDoc d{"bench", "", {}};
  for (std::size_t i = 0; i < words; ++i) {
    if (i) d.text += ' ';
    const std::string w = pool[i % 9];
    if (i % 3 == 0) d.spans.push_back({d.text.size(), d.text.size() + w.size(), symbols[i % 4]});
    d.text += w;
  }
  return d;
}

void BM_RenderEntity(benchmark::State& state) {
  const auto d = make_doc(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(render_marked(d, schema(), MarkerFormat::entity()));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * d.text.size()));
}
BENCHMARK(BM_RenderEntity)->Arg(32)->Arg(256)->Arg(2048);

void BM_ParseEntityStrict(benchmark::State& state) {
  const auto d = make_doc(static_cast<std::size_t>(state.range(0)));
  const std::string marked = render_marked(d, schema(), MarkerFormat::entity());
  for (auto _ : state)
    benchmark::DoNotOptimize(parse_marked(marked, schema(), MarkerFormat::entity(), ParseMode::kStrict));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * marked.size()));
}
BENCHMARK(BM_ParseEntityStrict)->Arg(32)->Arg(256)->Arg(2048);

void BM_MatchExact(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<Span> pred, gold;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < n; ++i) {
    gold.push_back({i * 10, i * 10 + 5, "MAT"});
    pred.push_back({i * 10, i * 10 + 5 + rng() % 2, "MAT"});
  }
  for (auto _ : state) benchmark::DoNotOptimize(match_exact(pred, gold));
}
BENCHMARK(BM_MatchExact)->Arg(16)->Arg(256)->Arg(4096);

KnowledgeGraph chain(std::size_t n, const char* suffix) {
  KnowledgeGraph g;
  for (std::size_t i = 0; i < n; ++i) g.nodes.push_back({"material " + std::to_string(i) + suffix, "MAT", {"m" + std::to_string(i)}, {}});
  for (std::size_t i = 0; i < n; ++i) g.nodes.push_back({"use " + std::to_string(i), "APL", {}, {}});
  for (std::size_t i = 0; i < n; ++i) g.edges.push_back({i, "used for", n + i});
  return g;
}

void BM_ScoreKg(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pred = chain(n, "");
  const auto gold = chain(n, " (gold)");  // names differ; co-references carry the match
  for (auto _ : state) benchmark::DoNotOptimize(score_kg(pred, gold));
}
BENCHMARK(BM_ScoreKg)->Arg(8)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
