#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace echoscope::textsim {

// Lowercase stemmed tokens; never empty strings, never stop words.
using TokenList = std::vector<std::string>;

class StopWords {
 public:
  StopWords() = default;
  explicit StopWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  // The shipped English list.
  static const StopWords& english();
  // One token per line; blank lines and lines starting with '#' are ignored.
  static StopWords load(const std::filesystem::path& path);
  static StopWords parse(std::istream& in);

  bool contains(std::string_view token) const { return words_.contains(std::string(token)); }
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Splits on non-alphanumeric ASCII (bytes >= 0x80 stay inside tokens), lowercases,
// drops stop words, Porter-stems, and drops stems that are themselves stop words.
TokenList tokenize_and_stem(std::string_view text, const StopWords& stopwords = StopWords::english());

// |A ∩ B| / |A ∪ B| over the token sets; 0 when both are empty.
double jaccard(const TokenList& a, const TokenList& b);

struct SparseVector {
  std::vector<std::pair<std::size_t, double>> entries;  // strictly increasing index
  std::size_t dimension = 0;

  double norm() const;
  bool is_zero() const noexcept { return entries.empty(); }
};

double dot(const SparseVector& a, const SparseVector& b);
// Cosine of two sparse vectors of the same dimension; 0 if either is zero.
double cosine(const SparseVector& a, const SparseVector& b);

class TfidfModel {
 public:
  std::size_t corpus_size() const noexcept { return corpus_size_; }
  std::size_t vocabulary_size() const noexcept { return tokens_.size(); }
  // Column of `token`, or npos when out of vocabulary.
  std::size_t index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  double idf(std::size_t index) const { return idf_.at(index); }
  std::size_t document_frequency(std::size_t index) const { return df_.at(index); }

  // Audit dump: header line then "token<TAB>df<TAB>idf" per column.
  void dump(std::ostream& out) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  friend TfidfModel fit_tfidf(std::span<const TokenList> texts);

  std::unordered_map<std::string, std::size_t> vocabulary_;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
  std::size_t corpus_size_ = 0;
};

// idf(t) = ln((1 + N) / (1 + df(t))) + 1. Vocabulary columns are assigned in
// lexicographic token order. Throws InvalidArgument on an empty corpus.
TfidfModel fit_tfidf(std::span<const TokenList> texts);

// Raw counts times idf, L2-normalised. Out-of-vocabulary tokens are ignored.
SparseVector tfidf_vector(const TfidfModel& model, const TokenList& tokens);

// dot(u, v) / (|u| |v|), 0 when either norm is 0. Throws InvalidArgument on a size mismatch.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const float> u, std::span<const float> v);

enum class LexicalMethod { jaccard, tfidf };

std::string_view to_string(LexicalMethod method);

// Mean over the document's sentences of sim(sentence, utterance).
// Throws InvalidArgument for zero sentences or tfidf without a model.
double lexical_doc_similarity(LexicalMethod method, std::span<const TokenList> sentence_tokens,
                              const TokenList& utterance_tokens, const TfidfModel* model = nullptr);

}  // namespace echoscope::textsim
