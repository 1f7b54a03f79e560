#include <benchmark/benchmark.h>

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "echoscope/echo.hpp"

namespace {

using namespace echoscope;

constexpr std::size_t kDim = 384;

embedder::EmbeddingVector random_unit(std::mt19937_64& rng) {
  std::normal_distribution<float> g;
  embedder::EmbeddingVector v(kDim);
  double n = 0;
  for (auto& x : v) {
    x = g(rng);
    n += double(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(n));
  return v;
}

struct Corpus {
  corpus::UtteranceStore store;
  std::vector<embedder::EmbeddingVector> vectors;
  std::vector<corpus::Document> documents;
  std::vector<embedder::EmbeddingVector> document_vectors;
};

// `per_day` utterances on each of 40 days, and 20 documents released in the middle.
Corpus make_corpus(std::size_t per_day) {
  std::mt19937_64 rng(1);
  Corpus c;
  const Date first = *parse_date("2021-01-01");
  for (int d = 0; d < 40; ++d) {
    for (std::size_t i = 0; i < per_day; ++i) {
      corpus::Utterance u;
      u.id = std::to_string(c.store.size());
      u.created_at.utc = std::chrono::sys_days(first + std::chrono::days{d}) + std::chrono::milliseconds(i);
      c.store.add(std::move(u));
      c.vectors.push_back(random_unit(rng));
    }
  }
  for (int d = 0; d < 20; ++d) {
    corpus::Document doc;
    doc.id = "d" + std::to_string(d);
    doc.release_date = first + std::chrono::days{10 + d};
    c.documents.push_back(doc);
    c.document_vectors.push_back(random_unit(rng));
  }
  return c;
}

void BM_CountDay(benchmark::State& state) {
  const auto c = make_corpus(static_cast<std::size_t>(state.range(0)));
  const echo::UtteranceEmbeddings emb(c.store, c.vectors);
  const Date day = c.documents.front().release_date;
  for (auto _ : state) benchmark::DoNotOptimize(emb.count_day(c.document_vectors.front(), day, 0.7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CountDay)->Arg(200)->Arg(2000);

void BM_SimilarCount(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<embedder::EmbeddingVector> day;
  for (int i = 0; i < state.range(0); ++i) day.push_back(random_unit(rng));
  const auto doc = random_unit(rng);
  for (auto _ : state) benchmark::DoNotOptimize(echo::similar_count(doc, day, 0.7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimilarCount)->Arg(200)->Arg(2000);

void BM_BatchEcho(benchmark::State& state) {
  const auto c = make_corpus(500);
  const echo::UtteranceEmbeddings emb(c.store, c.vectors);
  for (auto _ : state) {
    benchmark::DoNotOptimize(echo::batch_echo(c.documents, c.document_vectors, emb, {}, {},
                                              static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_BatchEcho)->Arg(1)->Arg(4);

}  // namespace
