#include <gtest/gtest.h>

#include "echoscope/echo.hpp"
#include "echoscope/errors.hpp"
#include "echoscope/textsim.hpp"
#include "support.hpp"

using namespace echoscope;
using namespace echoscope::echo;
using echoscope::testing::day;
using echoscope::testing::document;
using echoscope::testing::kDissimilar;
using echoscope::testing::kDocAxis;
using echoscope::testing::kSimilar;
using echoscope::testing::SyntheticCorpus;
using std::chrono::days;

namespace {

std::vector<DailySimilarCount> counts(std::initializer_list<std::pair<std::size_t, std::size_t>> st) {
  std::vector<DailySimilarCount> out;
  Date d = day("2020-01-01");
  for (const auto& [s, t] : st) out.push_back({d += days{1}, s, t});
  return out;
}

std::vector<DailySimilarCount> similar_only(std::initializer_list<std::size_t> s) {
  std::vector<DailySimilarCount> out;
  Date d = day("2020-01-01");
  for (auto x : s) out.push_back({d += days{1}, x, 100});
  return out;
}

// Constant volume `total` from release-7 to release+7 with `similar(offset)` similar utterances per day.
template <typename F>
SyntheticCorpus volume_fixture(Date release, std::size_t total, F similar) {
  SyntheticCorpus c;
  for (int off = -7; off <= 7; ++off) {
    const std::size_t s = similar(off);
    c.add_many(release + days{off}, s, kSimilar);
    c.add_many(release + days{off}, total - s, kDissimilar);
  }
  return c;
}

}  // namespace

TEST(SimilarCount, Examples) {
  const std::vector<embedder::EmbeddingVector> same{kSimilar, kSimilar, kSimilar};
  EXPECT_EQ(similar_count(kDocAxis, same, 0.7), 3u);
  EXPECT_EQ(similar_count(kDocAxis, std::span<const embedder::EmbeddingVector>{}, 0.7), 0u);

  // Two utterances whose cosines straddle the threshold; the one exactly at it does not count.
  const embedder::EmbeddingVector at{0.7f, 0.714142842f}, above{0.71f, 0.704059659f};
  const double t = textsim::cosine(std::span<const float>(kDocAxis), std::span<const float>(at));
  ASSERT_NEAR(t, 0.70, 1e-6);
  const std::vector<embedder::EmbeddingVector> pair{at, above};
  EXPECT_EQ(similar_count(kDocAxis, pair, t), 1u);
}

TEST(WindowDays, Examples) {
  const Date release = day("2020-02-18");
  const auto w = window_days(release, {});
  ASSERT_EQ(w.pre.size(), 7u);
  EXPECT_EQ(w.pre.front(), day("2020-02-11"));
  EXPECT_EQ(w.pre.back(), day("2020-02-17"));
  EXPECT_EQ(w.post, (std::vector<Date>{day("2020-02-18"), day("2020-02-19"), day("2020-02-20")}));

  const auto minimal = window_days(release, {.pre_days = 1, .post_days = 1});
  EXPECT_EQ(minimal.pre, std::vector<Date>{release - days{1}});
  EXPECT_EQ(minimal.post, std::vector<Date>{release});

  const auto excl = window_days(release, {.include_release_in_post = false});
  EXPECT_EQ(excl.post, (std::vector<Date>{release + days{1}, release + days{2}, release + days{3}}));
}

TEST(WindowConfig, Validation) {
  EXPECT_NO_THROW(WindowConfig{}.validate());
  EXPECT_THROW((WindowConfig{.threshold = 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((WindowConfig{.threshold = 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((WindowConfig{.pre_days = 0}.validate()), InvalidArgument);
  EXPECT_THROW((WindowConfig{.post_days = -1}.validate()), InvalidArgument);
}

TEST(DeltaRaw, Examples) {
  EXPECT_DOUBLE_EQ(delta_raw(similar_only({0, 0, 0}), similar_only({0, 0})), 0.0);
  EXPECT_DOUBLE_EQ(delta_raw(similar_only({1, 1, 1, 1, 1, 1, 1}), similar_only({8, 9, 10})), 8.0);
  EXPECT_DOUBLE_EQ(delta_raw(similar_only({10, 10}), similar_only({4, 4})), -6.0);
  EXPECT_THROW(delta_raw({}, similar_only({1})), InvalidArgument);
}

TEST(DeltaProp, Examples) {
  EXPECT_DOUBLE_EQ(delta_prop(counts({{5, 5}, {7, 7}}), counts({{3, 3}})).value, 0.0);
  EXPECT_NEAR(delta_prop(counts({{1, 20}, {2, 40}}), counts({{10, 50}})).value, 0.15, 1e-15);
  const auto excluded = delta_prop(counts({{0, 0}, {5, 50}}), counts({{5, 50}}));
  EXPECT_DOUBLE_EQ(excluded.value, 0.0);  // pre mean 0.1 over the one non-empty day
  EXPECT_EQ(excluded.excluded_zero_volume_days, 1u);
}

TEST(DeltaProp, UndefinedWithoutVolume) {
  try {
    delta_prop(counts({{0, 0}, {0, 0}}), counts({{1, 10}}), "doc-9");
    FAIL() << "expected UndefinedResultError";
  } catch (const UndefinedResultError& e) {
    EXPECT_EQ(e.subject(), "doc-9");
  }
  EXPECT_THROW(delta_prop(counts({{1, 10}}), counts({{0, 0}})), UndefinedResultError);
}

TEST(ComputeEcho, NoSimilarUtterances) {
  const Date release = day("2021-06-10");
  const auto c = volume_fixture(release, 20, [](int) { return 0; });
  const auto emb = c.embeddings();
  const auto s = compute_echo(document("d", release), kDocAxis, emb, {});
  EXPECT_EQ(s.delta_raw, 0.0);
  EXPECT_EQ(s.delta_prop, 0.0);
  EXPECT_TRUE(s.flags.no_similar_tweets);
  EXPECT_EQ(s.pre.size(), 7u);
  EXPECT_EQ(s.post.size(), 3u);
}

TEST(ComputeEcho, InjectedEchoAndVolumeDoubling) {
  const Date release = day("2021-06-10");
  for (std::size_t k : {1u, 5u, 50u}) {
    auto inject = [k](int off) { return off >= 0 && off <= 2 ? k : 0; };
    const auto base = volume_fixture(release, 200, inject);
    const auto doubled = volume_fixture(release, 400, inject);
    const auto eb = base.embeddings();
    const auto ed = doubled.embeddings();
    const auto s1 = compute_echo(document("d", release), kDocAxis, eb, {});
    const auto s2 = compute_echo(document("d", release), kDocAxis, ed, {});
    EXPECT_NEAR(s1.delta_raw, static_cast<double>(k), 1e-12);
    EXPECT_NEAR(s2.delta_raw, static_cast<double>(k), 1e-12);
    EXPECT_NEAR(s1.delta_prop, k / 200.0, 1e-12);
    EXPECT_NEAR(s2.delta_prop, s1.delta_prop / 2, 1e-12);
    EXPECT_FALSE(s1.flags.no_similar_tweets);
  }
}

TEST(ComputeEcho, ReportsMissingCoverage) {
  const Date release = day("2021-06-10");
  SyntheticCorpus c;
  for (int off = -3; off <= 2; ++off) c.add(release + days{off}, kSimilar);
  const auto emb = c.embeddings();
  try {
    compute_echo(document("d", release), kDocAxis, emb, {});
    FAIL() << "expected CoverageError";
  } catch (const CoverageError& e) {
    EXPECT_EQ(e.document_id(), "d");
    EXPECT_EQ(e.missing_days(), (std::vector<std::string>{"2021-06-03", "2021-06-04", "2021-06-05", "2021-06-06"}));
  }
  EXPECT_NO_THROW(compute_echo(document("d", release), kDocAxis, emb, {.pre_days = 3}));
  const embedder::EmbeddingVector wrong{1, 0, 0};
  EXPECT_THROW(compute_echo(document("d", release), wrong, emb, {.pre_days = 3}), InvalidArgument);
}

TEST(ComputeEcho, CoveredEmptyDaysCountAsZeroVolume) {
  const Date release = day("2021-06-10");
  SyntheticCorpus c;
  c.add_many(release - days{2}, 4, kDissimilar);
  c.add_many(release, 4, kSimilar);
  c.store.set_coverage(release - days{7}, release + days{7});
  const auto emb = c.embeddings();
  const auto s = compute_echo(document("d", release), kDocAxis, emb, {});
  EXPECT_NEAR(s.delta_raw, 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.delta_prop, 1.0, 1e-12);
  EXPECT_EQ(s.flags.excluded_zero_volume_days, 8u);
}

TEST(BatchEcho, CollinearDeltasGivePearsonOne) {
  const Date release = day("2021-06-10");
  const embedder::EmbeddingVector a{1, 0, 0}, b{0, 1, 0}, none{0, 0, 1};
  SyntheticCorpus c;
  for (int off = -7; off <= 2; ++off) {
    if (off < 0) {
      c.add_many(release + days{off}, 10, none);
    } else {
      c.add_many(release + days{off}, 1, a);
      c.add_many(release + days{off}, 3, b);
      c.add_many(release + days{off}, 6, none);
    }
  }
  const auto emb = c.embeddings();
  const std::vector<corpus::Document> docs{document("A", release), document("B", release)};
  const std::vector<embedder::EmbeddingVector> vecs{a, b};
  const auto r = batch_echo(docs, vecs, emb, {});
  ASSERT_EQ(r.scores.size(), 2u);
  EXPECT_NEAR(r.scores[0].delta_raw, 1.0, 1e-12);
  EXPECT_NEAR(r.scores[0].delta_prop, 0.1, 1e-12);
  EXPECT_NEAR(r.scores[1].delta_raw, 3.0, 1e-12);
  EXPECT_NEAR(r.scores[1].delta_prop, 0.3, 1e-12);
  ASSERT_TRUE(r.summary.pearson_r);
  EXPECT_NEAR(*r.summary.pearson_r, 1.0, 1e-12);
  ASSERT_EQ(r.summary.top_raw.size(), 2u);
  EXPECT_EQ(r.summary.top_raw[0].document_id, "B");
}

TEST(BatchEcho, AllDissimilar) {
  const Date release = day("2021-06-10");
  const auto c = volume_fixture(release, 5, [](int) { return 0; });
  const auto emb = c.embeddings();
  const std::vector<corpus::Document> docs{document("A", release), document("B", release + days{1})};
  const std::vector<embedder::EmbeddingVector> vecs{kDocAxis, kDocAxis};
  const auto r = batch_echo(docs, vecs, emb, {});
  EXPECT_EQ(r.summary.no_similar_count, 2u);
  EXPECT_DOUBLE_EQ(r.summary.no_similar_fraction, 1.0);
  EXPECT_FALSE(r.summary.delta_raw);
  EXPECT_FALSE(r.summary.delta_prop);
  EXPECT_FALSE(r.summary.pearson_r);
  EXPECT_TRUE(r.summary.top_raw.empty());
}

TEST(BatchEcho, CollectsFailuresAndKeepsInputOrder) {
  const Date release = day("2021-06-10");
  const auto c = volume_fixture(release, 5, [](int off) { return off >= 0 ? 2 : 0; });
  const auto emb = c.embeddings();
  const std::vector<corpus::Document> docs{document("late", release + days{6}), document("ok1", release),
                                           document("unembedded", release), document("ok2", release - days{0})};
  const std::vector<embedder::EmbeddingVector> vecs{kDocAxis, kDocAxis, {}, kSimilar};
  for (std::size_t workers : {1u, 3u}) {
    const auto r = batch_echo(docs, vecs, emb, {}, {}, workers);
    ASSERT_EQ(r.scores.size(), 2u);
    EXPECT_EQ(r.scores[0].document_id, "ok1");
    EXPECT_EQ(r.scores[1].document_id, "ok2");
    ASSERT_EQ(r.failures.size(), 2u);
    EXPECT_EQ(r.failures[0].document_id, "late");
    EXPECT_EQ(r.failures[0].kind, EchoFailure::Kind::coverage);
    EXPECT_EQ(r.failures[0].missing_days, std::vector<std::string>{"2021-06-18"});
    EXPECT_EQ(r.failures[1].kind, EchoFailure::Kind::embedding);
    EXPECT_EQ(r.summary.documents_total, 4u);
    EXPECT_EQ(r.summary.documents_scored, 2u);
    EXPECT_EQ(r.summary.coverage_failures, 1u);
    EXPECT_EQ(r.summary.embedding_failures, 1u);
  }
}

TEST(BatchEcho, UndefinedProportionIsAFailure) {
  const Date release = day("2021-06-10");
  SyntheticCorpus c;
  c.add_many(release, 3, kSimilar);
  c.store.set_coverage(release - days{7}, release + days{3});
  const auto emb = c.embeddings();
  const std::vector<corpus::Document> docs{document("d", release)};
  const std::vector<embedder::EmbeddingVector> vecs{kDocAxis};
  const auto r = batch_echo(docs, vecs, emb, {});
  EXPECT_TRUE(r.scores.empty());
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].kind, EchoFailure::Kind::undefined);
  EXPECT_EQ(r.summary.undefined_failures, 1u);
}

TEST(WindowSensitivity, StationaryCorpusIsFlat) {
  const Date release = day("2021-06-10");
  const auto c = volume_fixture(release, 10, [](int) { return 3; });
  const auto emb = c.embeddings();
  const auto m = window_sensitivity(document("d", release), kDocAxis, emb, {});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(m[i][j].pre_days, kSensitivityWindows[i]);
      EXPECT_EQ(m[i][j].post_days, kSensitivityWindows[j]);
      EXPECT_DOUBLE_EQ(m[i][j].delta_raw, 0.0);
      ASSERT_TRUE(m[i][j].delta_prop);
      EXPECT_DOUBLE_EQ(*m[i][j].delta_prop, 0.0);
    }
  }
}

TEST(WindowSensitivity, SpikeBeforeReleaseIsMostNegativeWithShortPre) {
  const Date release = day("2021-06-10");
  const auto c = volume_fixture(release, 200, [](int off) { return off == -1 ? 100u : off == 0 ? 60u : 2u; });
  const auto emb = c.embeddings();
  const auto m = window_sensitivity(document("d", release), kDocAxis, emb, {});
  EXPECT_LT(m[0][2].delta_raw, m[0][0].delta_raw);
  EXPECT_LT(m[0][2].delta_raw, m[0][1].delta_raw);
  EXPECT_LT(m[0][2].delta_raw, 0.0);
}

TEST(WindowSensitivity, ReleaseDayActivityDilutes) {
  const Date release = day("2021-06-10");
  const auto c = volume_fixture(release, 50, [](int off) { return off == 0 ? 21u : 0u; });
  const auto emb = c.embeddings();
  const auto m = window_sensitivity(document("d", release), kDocAxis, emb, {});
  for (const auto& row : m) {
    EXPECT_DOUBLE_EQ(row[0].delta_raw, 21.0);
    EXPECT_DOUBLE_EQ(row[1].delta_raw, 7.0);
    EXPECT_DOUBLE_EQ(row[2].delta_raw, 3.0);
  }
}

TEST(WindowSensitivity, NeedsWidestCoverage) {
  const Date release = day("2021-06-10");
  SyntheticCorpus c;
  for (int off = -3; off <= 3; ++off) c.add(release + days{off}, kSimilar);
  const auto emb = c.embeddings();
  EXPECT_THROW(window_sensitivity(document("d", release), kDocAxis, emb, {}), CoverageError);
}

TEST(UtteranceEmbeddings, MatchesDenseCosine) {
  SyntheticCorpus c;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<float> u(-1, 1);
  for (int i = 0; i < 200; ++i) c.add(day("2021-01-01"), {u(rng), u(rng), u(rng), u(rng), u(rng)});
  const auto emb = c.embeddings();
  const embedder::EmbeddingVector doc{0.3f, -0.2f, 0.9f, 0.1f, 0.0f};
  double nd = 0;
  for (float x : doc) nd += double(x) * x;
  for (std::size_t i = 0; i < c.store.size(); ++i) {
    EXPECT_EQ(emb.cosine(doc, std::sqrt(nd), i),
              textsim::cosine(std::span<const float>(doc), std::span<const float>(c.vectors[i])));
  }
  EXPECT_THROW(echo::UtteranceEmbeddings(c.store, {}), InvalidArgument);
}
