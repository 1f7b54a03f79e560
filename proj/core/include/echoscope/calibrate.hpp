#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace echoscope::calibrate {

enum class Method { embedding, tfidf, jaccard };
inline constexpr Method kAllMethods[] = {Method::embedding, Method::tfidf, Method::jaccard};

std::string_view to_string(Method method);

struct ScoredPair {
  std::string document_id;
  std::string utterance_id;
  double embedding = 0.0;
  double tfidf = 0.0;
  double jaccard = 0.0;

  double score(Method method) const;
};

struct LabeledPair {
  ScoredPair pair;
  int label = 0;  // 1 = similar
};

// 0.50, 0.55, ..., 0.80: six bins.
std::vector<double> default_bin_edges();

// One temporally relevant utterance and its similarity to a document.
struct Candidate {
  std::string utterance_id;
  std::string text;
  double score = 0.0;
};

// Per bin, the first candidate of each distinct text whose score lies in [lo, hi)
// (the last bin also takes hi). Throws InvalidArgument unless edges strictly increase.
std::vector<std::vector<Candidate>> bin_candidates(std::span<const Candidate> candidates,
                                                   std::span<const double> edges);

// Distinct-text counts per bin.
std::vector<std::size_t> bin_counts(std::span<const Candidate> candidates,
                                    std::span<const double> edges);

// Documents whose every bin holds at least `min_per_bin` distinct texts.
std::set<std::string> eligible_documents(const std::map<std::string, std::vector<std::size_t>>& counts,
                                         std::size_t min_per_bin = 4);

struct DocumentBins {
  std::string document_id;
  std::string org;
  std::vector<std::vector<Candidate>> bins;
};

struct SamplePlan {
  std::size_t per_org = 4;
  std::size_t per_bin = 4;
  std::uint64_t seed = 0;
};

struct SampledPair {
  std::string pair_id;
  std::string document_id;
  std::string utterance_id;
  std::size_t bin = 0;
  double embedding_score = 0.0;
};

// Draws per_org documents per organisation, then per_bin candidates per bin of each,
// uniformly without replacement, and shuffles the result. Pair ids are assigned
// after shuffling. Throws DataError naming the first organisation that lacks
// documents or a document whose bin lacks candidates.
std::vector<SampledPair> sample_label_pairs(std::span<const DocumentBins> eligible,
                                            const SamplePlan& plan);

double accuracy(std::span<const int> labels, std::span<const int> predictions);
// Positive class is 1. 0 when precision + recall is 0.
double f1(std::span<const int> labels, std::span<const int> predictions);
// Hubert-Arabie adjusted Rand index over the contingency table of the two labelings.
double adjusted_rand_index(std::span<const int> labels, std::span<const int> predictions);

// 201 evenly spaced thresholds from 0 to 1.
std::vector<double> default_grid();

struct CalibrationCurve {
  Method method = Method::embedding;
  std::vector<double> thresholds;
  std::vector<double> accuracy;
  std::vector<double> f1;
  std::vector<double> ari;
  // Lowest threshold attaining each metric's maximum.
  double best_accuracy_threshold = 0.0;
  double best_f1_threshold = 0.0;
  double best_ari_threshold = 0.0;
};

// Predicts similar when score > t. Throws InvalidArgument on an empty pair list.
CalibrationCurve threshold_sweep(std::span<const LabeledPair> pairs, Method method,
                                 std::span<const double> grid);

struct LabelRecord {
  std::string pair_id;
  std::string coder1;
  std::string coder2;
  int final_label = 0;
};

struct LabelFile {
  std::vector<LabelRecord> records;
  std::size_t disagreements = 0;  // rows where coder1 != coder2
};

// CSV with columns pair_id, coder1, coder2, final (final in {0, 1}).
// Throws DataError on malformed rows or repeated pair ids.
LabelFile read_labels(std::istream& in);

}  // namespace echoscope::calibrate
