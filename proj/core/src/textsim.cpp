#include "echoscope/textsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "echoscope/errors.hpp"
#include "echoscope/porter.hpp"

namespace echoscope::textsim {
namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

template <typename T>
double dense_cosine(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i];
    const double b = v[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace

const StopWords& StopWords::english() {
  static const StopWords words(std::unordered_set<std::string>{
#include "stopwords_en.inc"
  });
  return words;
}

StopWords StopWords::parse(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    std::string word = line.substr(b, e - b + 1);
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(std::move(word));
  }
  return StopWords(std::move(words));
}

StopWords StopWords::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stop-word list " + path.string());
  return parse(in);
}

TokenList tokenize_and_stem(std::string_view text, const StopWords& stopwords) {
  TokenList tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (!stopwords.contains(current)) {
      std::string stem = porter_stem(current);
      if (!stem.empty() && !stopwords.contains(stem)) tokens.push_back(std::move(stem));
    }
    current.clear();
  };
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

double jaccard(const TokenList& a, const TokenList& b) {
  std::vector<std::string> sa(a.begin(), a.end());
  std::vector<std::string> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t shared = 0;
  auto i = sa.begin();
  auto j = sb.begin();
  while (i != sa.end() && j != sb.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(sa.size() + sb.size() - shared);
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [index, w] : entries) s += w * w;
  return std::sqrt(s);
}

double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.dimension != b.dimension) throw InvalidArgument("cosine: sparse dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::size_t TfidfModel::index_of(std::string_view token) const {
  const auto it = vocabulary_.find(std::string(token));
  return it == vocabulary_.end() ? npos : it->second;
}

void TfidfModel::dump(std::ostream& out) const {
  out << "# tfidf corpus_size=" << corpus_size_ << " vocabulary=" << tokens_.size() << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << df_[i] << '\t' << idf_[i] << '\n';
  }
}

TfidfModel fit_tfidf(std::span<const TokenList> texts) {
  if (texts.empty()) throw InvalidArgument("fit_tfidf: empty corpus");
  std::map<std::string, std::size_t> df;
  std::vector<std::string> distinct;
  for (const auto& text : texts) {
    distinct.assign(text.begin(), text.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (auto& t : distinct) ++df[t];
  }
  TfidfModel model;
  model.corpus_size_ = texts.size();
  const double n = static_cast<double>(texts.size());
  for (auto& [token, count] : df) {
    model.vocabulary_.emplace(token, model.tokens_.size());
    model.tokens_.push_back(token);
    model.df_.push_back(count);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

SparseVector tfidf_vector(const TfidfModel& model, const TokenList& tokens) {
  std::map<std::size_t, double> counts;
  for (const auto& t : tokens) {
    const auto index = model.index_of(t);
    if (index != TfidfModel::npos) counts[index] += 1.0;
  }
  SparseVector v;
  v.dimension = model.vocabulary_size();
  v.entries.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [index, count] : counts) {
    const double w = count * model.idf(index);
    v.entries.emplace_back(index, w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double norm = std::sqrt(norm2);
    for (auto& e : v.entries) e.second /= norm;
  }
  return v;
}

double cosine(std::span<const double> u, std::span<const double> v) { return dense_cosine(u, v); }
double cosine(std::span<const float> u, std::span<const float> v) { return dense_cosine(u, v); }

std::string_view to_string(LexicalMethod method) {
  return method == LexicalMethod::jaccard ? "jaccard" : "tfidf";
}

double lexical_doc_similarity(LexicalMethod method, std::span<const TokenList> sentence_tokens,
                              const TokenList& utterance_tokens, const TfidfModel* model) {
  if (sentence_tokens.empty()) throw InvalidArgument("lexical_doc_similarity: document has no sentences");
  double total = 0.0;
  if (method == LexicalMethod::jaccard) {
    for (const auto& s : sentence_tokens) total += jaccard(s, utterance_tokens);
  } else {
    if (!model) throw InvalidArgument("lexical_doc_similarity: tfidf requires a fitted model");
    const auto u = tfidf_vector(*model, utterance_tokens);
    for (const auto& s : sentence_tokens) total += cosine(tfidf_vector(*model, s), u);
  }
  return total / static_cast<double>(sentence_tokens.size());
}

}  // namespace echoscope::textsim
