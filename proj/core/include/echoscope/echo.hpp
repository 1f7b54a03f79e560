#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echoscope/corpus.hpp"
#include "echoscope/dates.hpp"
#include "echoscope/embedder.hpp"

namespace echoscope::echo {

struct WindowConfig {
  double threshold = 0.7;
  int pre_days = 7;
  int post_days = 3;
  bool include_release_in_post = true;

  // Throws InvalidArgument unless 0 < threshold < 1 and both windows are at least a day.
  void validate() const;
  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct DailySimilarCount {
  Date day{};
  std::size_t similar_count = 0;  // |S_i|
  std::size_t total_count = 0;    // T_i

  friend bool operator==(const DailySimilarCount&, const DailySimilarCount&) = default;
};

struct EchoFlags {
  bool no_similar_tweets = false;
  std::size_t excluded_zero_volume_days = 0;
};

struct EchoScore {
  std::string document_id;
  double delta_raw = 0.0;
  double delta_prop = 0.0;
  std::vector<DailySimilarCount> pre;
  std::vector<DailySimilarCount> post;
  WindowConfig config;
  EchoFlags flags;
};

struct WindowDays {
  std::vector<Date> pre;
  std::vector<Date> post;
};

// Pre = release-pre_days .. release-1. Post starts at the release day when it is
// included, otherwise the day after, and runs for post_days days.
WindowDays window_days(Date release, const WindowConfig& config);

// Number of utterance vectors whose cosine to `document` strictly exceeds `threshold`.
std::size_t similar_count(std::span<const float> document,
                          std::span<const embedder::EmbeddingVector> utterances, double threshold);

// Mean post |S_i| minus mean pre |S_j|. Throws InvalidArgument if either window is empty.
double delta_raw(std::span<const DailySimilarCount> pre, std::span<const DailySimilarCount> post);

struct ProportionalDelta {
  double value = 0.0;
  std::size_t excluded_zero_volume_days = 0;
};

// Mean post |S_i|/T_i minus mean pre |S_j|/T_j, skipping days with T = 0.
// Throws UndefinedResultError (carrying `document_id`) when a window has no volume at all.
ProportionalDelta delta_prop(std::span<const DailySimilarCount> pre,
                             std::span<const DailySimilarCount> post,
                             std::string_view document_id = {});

// Utterance embeddings aligned with store indices, with norms precomputed so each
// document-utterance comparison costs one dot product.
class UtteranceEmbeddings {
 public:
  UtteranceEmbeddings(const corpus::UtteranceStore& store,
                      std::vector<embedder::EmbeddingVector> vectors);

  const corpus::UtteranceStore& store() const noexcept { return *store_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::span<const float> vector(std::size_t index) const { return vectors_[index]; }

  // Same value as textsim::cosine(document, vector(index)).
  double cosine(std::span<const float> document, double document_norm, std::size_t index) const;

  // |S_i| and T_i for one day.
  DailySimilarCount count_day(std::span<const float> document, Date day, double threshold) const;

 private:
  const corpus::UtteranceStore* store_;
  std::vector<embedder::EmbeddingVector> vectors_;
  std::vector<double> norms_;
  std::size_t dimension_ = 0;
};

// Throws CoverageError listing window days outside the corpus' coverage,
// UndefinedResultError from delta_prop, and InvalidArgument on dimension mismatch.
EchoScore compute_echo(const corpus::Document& document, std::span<const float> document_embedding,
                       const UtteranceEmbeddings& utterances, const WindowConfig& config);

struct EchoFailure {
  enum class Kind { coverage, undefined, embedding };
  std::string document_id;
  Kind kind = Kind::coverage;
  std::string message;
  std::vector<std::string> missing_days;
};

std::string_view to_string(EchoFailure::Kind kind);

struct PercentileRow {
  double p50 = 0, p90 = 0, p95 = 0, p97 = 0, max = 0;
};

struct RankedDocument {
  std::string document_id;
  double value = 0.0;
};

struct EchoSummary {
  std::size_t documents_total = 0;
  std::size_t documents_scored = 0;
  std::size_t coverage_failures = 0;
  std::size_t undefined_failures = 0;
  std::size_t embedding_failures = 0;
  std::size_t no_similar_count = 0;
  double no_similar_fraction = 0.0;
  std::size_t with_similar_count = 0;
  // Over documents with at least one similar utterance; empty when there are none.
  std::optional<PercentileRow> delta_raw;
  std::optional<PercentileRow> delta_prop;
  std::optional<double> pearson_r;
  std::optional<double> pearson_p;
  std::vector<RankedDocument> top_raw;
  std::vector<RankedDocument> top_prop;
};

struct SummaryOptions {
  std::size_t top_k = 5;
  // 0 skips the permutation test.
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
};

EchoSummary summarize(std::span<const EchoScore> scores, std::span<const EchoFailure> failures,
                      const SummaryOptions& options = {});

struct BatchResult {
  std::vector<EchoScore> scores;  // input order, successes only
  std::vector<EchoFailure> failures;
  EchoSummary summary;
};

// `document_embeddings` is aligned with `documents`; an empty vector marks a document
// that could not be embedded. Failures are collected, never thrown.
BatchResult batch_echo(std::span<const corpus::Document> documents,
                       std::span<const embedder::EmbeddingVector> document_embeddings,
                       const UtteranceEmbeddings& utterances, const WindowConfig& config,
                       const SummaryOptions& summary_options = {}, std::size_t workers = 1);

inline constexpr std::array<int, 3> kSensitivityWindows{1, 3, 7};

struct SensitivityCell {
  int pre_days = 0;
  int post_days = 0;
  double delta_raw = 0.0;
  std::optional<double> delta_prop;  // nullopt when undefined for that window pair
};

// Rows are pre-window sizes, columns post-window sizes, both over {1, 3, 7}.
using SensitivityMatrix = std::array<std::array<SensitivityCell, 3>, 3>;

// Requires coverage of the widest (7-day) windows; threshold and release-day handling
// come from `base`.
SensitivityMatrix window_sensitivity(const corpus::Document& document,
                                     std::span<const float> document_embedding,
                                     const UtteranceEmbeddings& utterances,
                                     const WindowConfig& base);

}  // namespace echoscope::echo
