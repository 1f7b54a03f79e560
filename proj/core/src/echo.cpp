#include "echoscope/echo.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "echoscope/errors.hpp"
#include "echoscope/parallel.hpp"
#include "echoscope/stats.hpp"
#include "echoscope/textsim.hpp"

namespace echoscope::echo {
namespace {

// Accumulated exactly as textsim::cosine does, so cached norms reproduce its result bit for bit.
double vector_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) {
    const double a = x;
    s += a * a;
  }
  return std::sqrt(s);
}

std::vector<std::string> uncovered(const corpus::UtteranceStore& store, const WindowDays& days) {
  std::vector<std::string> missing;
  for (const auto* list : {&days.pre, &days.post}) {
    for (Date d : *list) {
      if (!store.covers(d)) missing.push_back(format_date(d));
    }
  }
  std::sort(missing.begin(), missing.end());
  return missing;
}

void check_dimension(std::span<const float> document, const UtteranceEmbeddings& utterances) {
  if (utterances.store().empty()) return;
  if (document.size() != utterances.dimension()) {
    throw InvalidArgument("document embedding has dimension " + std::to_string(document.size()) +
                          ", utterances have " + std::to_string(utterances.dimension()));
  }
}

PercentileRow percentile_row(std::span<const double> values) {
  return {stats::percentile(values, 50), stats::percentile(values, 90), stats::percentile(values, 95),
          stats::percentile(values, 97), *std::max_element(values.begin(), values.end())};
}

std::vector<RankedDocument> top(std::vector<RankedDocument> items, std::size_t k) {
  std::stable_sort(items.begin(), items.end(), [](const RankedDocument& a, const RankedDocument& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.document_id < b.document_id;
  });
  if (items.size() > k) items.resize(k);
  return items;
}

}  // namespace

void WindowConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgument("window config: threshold must lie strictly between 0 and 1");
  }
  if (pre_days < 1 || post_days < 1) throw InvalidArgument("window config: windows must span at least one day");
}

WindowDays window_days(Date release, const WindowConfig& config) {
  WindowDays w;
  for (int d = config.pre_days; d >= 1; --d) w.pre.push_back(release - std::chrono::days{d});
  const int first = config.include_release_in_post ? 0 : 1;
  for (int d = 0; d < config.post_days; ++d) w.post.push_back(release + std::chrono::days{first + d});
  return w;
}

std::size_t similar_count(std::span<const float> document, std::span<const embedder::EmbeddingVector> utterances,
                          double threshold) {
  std::size_t n = 0;
  for (const auto& u : utterances) {
    if (textsim::cosine(document, std::span<const float>(u)) > threshold) ++n;
  }
  return n;
}

double delta_raw(std::span<const DailySimilarCount> pre, std::span<const DailySimilarCount> post) {
  if (pre.empty() || post.empty()) throw InvalidArgument("delta_raw: empty window");
  double pre_sum = 0.0, post_sum = 0.0;
  for (const auto& d : pre) pre_sum += static_cast<double>(d.similar_count);
  for (const auto& d : post) post_sum += static_cast<double>(d.similar_count);
  return post_sum / static_cast<double>(post.size()) - pre_sum / static_cast<double>(pre.size());
}

ProportionalDelta delta_prop(std::span<const DailySimilarCount> pre, std::span<const DailySimilarCount> post,
                             std::string_view document_id) {
  ProportionalDelta out;
  auto window_mean = [&](std::span<const DailySimilarCount> days, const char* name) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& d : days) {
      if (d.total_count == 0) {
        ++out.excluded_zero_volume_days;
        continue;
      }
      sum += static_cast<double>(d.similar_count) / static_cast<double>(d.total_count);
      ++used;
    }
    if (used == 0) {
      throw UndefinedResultError(std::string(document_id),
                                 std::string("delta_prop undefined: every ") + name + "-window day has zero volume");
    }
    return sum / static_cast<double>(used);
  };
  const double pre_mean = window_mean(pre, "pre");
  const double post_mean = window_mean(post, "post");
  out.value = post_mean - pre_mean;
  return out;
}

UtteranceEmbeddings::UtteranceEmbeddings(const corpus::UtteranceStore& store,
                                         std::vector<embedder::EmbeddingVector> vectors)
    : store_(&store), vectors_(std::move(vectors)) {
  if (vectors_.size() != store.size()) {
    throw InvalidArgument("utterance embeddings: " + std::to_string(vectors_.size()) + " vectors for " +
                          std::to_string(store.size()) + " utterances");
  }
  if (!vectors_.empty()) dimension_ = vectors_.front().size();
  norms_.reserve(vectors_.size());
  for (const auto& v : vectors_) {
    if (v.size() != dimension_) throw InvalidArgument("utterance embeddings: inconsistent dimensions");
    norms_.push_back(vector_norm(v));
  }
}

double UtteranceEmbeddings::cosine(std::span<const float> document, double document_norm, std::size_t index) const {
  const auto& v = vectors_[index];
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dot += static_cast<double>(document[i]) * static_cast<double>(v[i]);
  if (document_norm == 0.0 || norms_[index] == 0.0) return 0.0;
  return dot / (document_norm * norms_[index]);
}

DailySimilarCount UtteranceEmbeddings::count_day(std::span<const float> document, Date day, double threshold) const {
  const auto ids = store_->on_day(day);
  const double norm = vector_norm(document);
  DailySimilarCount c{day, 0, ids.size()};
  for (std::size_t index : ids) {
    if (cosine(document, norm, index) > threshold) ++c.similar_count;
  }
  return c;
}

EchoScore compute_echo(const corpus::Document& document, std::span<const float> document_embedding,
                       const UtteranceEmbeddings& utterances, const WindowConfig& config) {
  config.validate();
  check_dimension(document_embedding, utterances);
  const auto days = window_days(document.release_date, config);
  if (auto missing = uncovered(utterances.store(), days); !missing.empty()) {
    throw CoverageError(document.id, std::move(missing));
  }
  EchoScore score;
  score.document_id = document.id;
  score.config = config;
  for (Date d : days.pre) score.pre.push_back(utterances.count_day(document_embedding, d, config.threshold));
  for (Date d : days.post) score.post.push_back(utterances.count_day(document_embedding, d, config.threshold));
  score.delta_raw = delta_raw(score.pre, score.post);
  const auto prop = delta_prop(score.pre, score.post, document.id);
  score.delta_prop = prop.value;
  score.flags.excluded_zero_volume_days = prop.excluded_zero_volume_days;
  auto silent = [](const DailySimilarCount& c) { return c.similar_count == 0; };
  score.flags.no_similar_tweets =
      std::all_of(score.pre.begin(), score.pre.end(), silent) && std::all_of(score.post.begin(), score.post.end(), silent);
  return score;
}

std::string_view to_string(EchoFailure::Kind kind) {
  switch (kind) {
    case EchoFailure::Kind::coverage: return "coverage";
    case EchoFailure::Kind::undefined: return "undefined";
    case EchoFailure::Kind::embedding: return "embedding";
  }
  return "unknown";
}

EchoSummary summarize(std::span<const EchoScore> scores, std::span<const EchoFailure> failures,
                      const SummaryOptions& options) {
  EchoSummary s;
  s.documents_scored = scores.size();
  s.documents_total = scores.size() + failures.size();
  for (const auto& f : failures) {
    switch (f.kind) {
      case EchoFailure::Kind::coverage: ++s.coverage_failures; break;
      case EchoFailure::Kind::undefined: ++s.undefined_failures; break;
      case EchoFailure::Kind::embedding: ++s.embedding_failures; break;
    }
  }
  std::vector<double> raw, prop;
  std::vector<RankedDocument> raw_rank, prop_rank;
  for (const auto& e : scores) {
    if (e.flags.no_similar_tweets) {
      ++s.no_similar_count;
      continue;
    }
    raw.push_back(e.delta_raw);
    prop.push_back(e.delta_prop);
    raw_rank.push_back({e.document_id, e.delta_raw});
    prop_rank.push_back({e.document_id, e.delta_prop});
  }
  s.with_similar_count = raw.size();
  if (!scores.empty()) {
    s.no_similar_fraction = static_cast<double>(s.no_similar_count) / static_cast<double>(scores.size());
  }
  if (!raw.empty()) {
    s.delta_raw = percentile_row(raw);
    s.delta_prop = percentile_row(prop);
  }
  if (raw.size() >= 2) {
    try {
      s.pearson_r = stats::pearson(raw, prop);
      if (options.permutations > 0) {
        s.pearson_p = stats::pearson_permutation_p(raw, prop, options.permutations, options.seed);
      }
    } catch (const UndefinedResultError&) {
    }
  }
  s.top_raw = top(std::move(raw_rank), options.top_k);
  s.top_prop = top(std::move(prop_rank), options.top_k);
  return s;
}

BatchResult batch_echo(std::span<const corpus::Document> documents,
                       std::span<const embedder::EmbeddingVector> document_embeddings,
                       const UtteranceEmbeddings& utterances, const WindowConfig& config,
                       const SummaryOptions& summary_options, std::size_t workers) {
  config.validate();
  if (document_embeddings.size() != documents.size()) {
    throw InvalidArgument("batch_echo: embeddings not aligned with documents");
  }
  std::vector<std::optional<EchoScore>> scored(documents.size());
  std::vector<std::optional<EchoFailure>> failed(documents.size());
  parallel_for(documents.size(), workers, [&](std::size_t i) {
    const auto& doc = documents[i];
    if (document_embeddings[i].empty()) {
      failed[i] = EchoFailure{doc.id, EchoFailure::Kind::embedding, "document has no text to embed", {}};
      return;
    }
    try {
      scored[i] = compute_echo(doc, document_embeddings[i], utterances, config);
    } catch (const CoverageError& e) {
      failed[i] = EchoFailure{doc.id, EchoFailure::Kind::coverage, e.what(), e.missing_days()};
    } catch (const UndefinedResultError& e) {
      failed[i] = EchoFailure{doc.id, EchoFailure::Kind::undefined, e.what(), {}};
    } catch (const InvalidArgument& e) {
      failed[i] = EchoFailure{doc.id, EchoFailure::Kind::embedding, e.what(), {}};
    }
  });
  BatchResult out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (scored[i]) out.scores.push_back(std::move(*scored[i]));
    if (failed[i]) out.failures.push_back(std::move(*failed[i]));
  }
  out.summary = summarize(out.scores, out.failures, summary_options);
  return out;
}

SensitivityMatrix window_sensitivity(const corpus::Document& document, std::span<const float> document_embedding,
                                     const UtteranceEmbeddings& utterances, const WindowConfig& base) {
  base.validate();
  check_dimension(document_embedding, utterances);
  WindowConfig widest = base;
  widest.pre_days = kSensitivityWindows.back();
  widest.post_days = kSensitivityWindows.back();
  const auto span_days = window_days(document.release_date, widest);
  if (auto missing = uncovered(utterances.store(), span_days); !missing.empty()) {
    throw CoverageError(document.id, std::move(missing));
  }
  std::map<Date, DailySimilarCount> counts;
  for (const auto* list : {&span_days.pre, &span_days.post}) {
    for (Date d : *list) counts.emplace(d, utterances.count_day(document_embedding, d, base.threshold));
  }

  SensitivityMatrix m{};
  for (std::size_t r = 0; r < kSensitivityWindows.size(); ++r) {
    for (std::size_t c = 0; c < kSensitivityWindows.size(); ++c) {
      WindowConfig cfg = base;
      cfg.pre_days = kSensitivityWindows[r];
      cfg.post_days = kSensitivityWindows[c];
      const auto days = window_days(document.release_date, cfg);
      std::vector<DailySimilarCount> pre, post;
      for (Date d : days.pre) pre.push_back(counts.at(d));
      for (Date d : days.post) post.push_back(counts.at(d));
      auto& cell = m[r][c];
      cell.pre_days = cfg.pre_days;
      cell.post_days = cfg.post_days;
      cell.delta_raw = delta_raw(pre, post);
      try {
        cell.delta_prop = delta_prop(pre, post, document.id).value;
      } catch (const UndefinedResultError&) {
        cell.delta_prop = std::nullopt;
      }
    }
  }
  return m;
}

}  // namespace echoscope::echo
