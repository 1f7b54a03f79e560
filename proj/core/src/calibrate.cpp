#include "echoscope/calibrate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "echoscope/csv.hpp"
#include "echoscope/errors.hpp"
#include "echoscope/stats.hpp"

namespace echoscope::calibrate {
namespace {

void check_lengths(std::span<const int> labels, std::span<const int> predictions, const char* name) {
  if (labels.size() != predictions.size()) {
    throw InvalidArgument(std::string(name) + ": length mismatch (" + std::to_string(labels.size()) + " vs " +
                          std::to_string(predictions.size()) + ")");
  }
}

double pairs_of(double n) { return n * (n - 1.0) / 2.0; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::embedding: return "embedding";
    case Method::tfidf: return "tfidf";
    case Method::jaccard: return "jaccard";
  }
  return "unknown";
}

double ScoredPair::score(Method method) const {
  switch (method) {
    case Method::embedding: return embedding;
    case Method::tfidf: return tfidf;
    case Method::jaccard: return jaccard;
  }
  return 0.0;
}

std::vector<double> default_bin_edges() {
  std::vector<double> edges;
  for (int hundredths = 50; hundredths <= 80; hundredths += 5) edges.push_back(hundredths / 100.0);
  return edges;
}

std::vector<std::vector<Candidate>> bin_candidates(std::span<const Candidate> candidates,
                                                   std::span<const double> edges) {
  if (edges.size() < 2) throw InvalidArgument("bin edges: need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InvalidArgument("bin edges must be strictly increasing");
  }
  const std::size_t bins = edges.size() - 1;
  std::vector<std::vector<Candidate>> out(bins);
  std::vector<std::unordered_set<std::string>> seen(bins);
  for (const auto& c : candidates) {
    if (c.score < edges.front() || c.score > edges.back()) continue;
    std::size_t b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), c.score) - edges.begin());
    b = std::min(b, edges.size() - 1) - 1;  // the final edge belongs to the last bin
    if (seen[b].insert(c.text).second) out[b].push_back(c);
  }
  return out;
}

std::vector<std::size_t> bin_counts(std::span<const Candidate> candidates, std::span<const double> edges) {
  const auto bins = bin_candidates(candidates, edges);
  std::vector<std::size_t> counts;
  counts.reserve(bins.size());
  for (const auto& b : bins) counts.push_back(b.size());
  return counts;
}

std::set<std::string> eligible_documents(const std::map<std::string, std::vector<std::size_t>>& counts,
                                         std::size_t min_per_bin) {
  std::set<std::string> out;
  for (const auto& [id, bins] : counts) {
    if (!bins.empty() && std::all_of(bins.begin(), bins.end(), [&](std::size_t n) { return n >= min_per_bin; })) {
      out.insert(id);
    }
  }
  return out;
}

std::vector<SampledPair> sample_label_pairs(std::span<const DocumentBins> eligible, const SamplePlan& plan) {
  std::map<std::string, std::vector<const DocumentBins*>> by_org;
  for (const auto& d : eligible) by_org[d.org].push_back(&d);

  stats::SeededRng rng(plan.seed);
  std::vector<SampledPair> pairs;
  for (auto& [org, docs] : by_org) {
    if (docs.size() < plan.per_org) {
      throw DataError("organisation '" + org + "' has " + std::to_string(docs.size()) +
                      " eligible documents, needs " + std::to_string(plan.per_org));
    }
    std::sort(docs.begin(), docs.end(),
              [](const DocumentBins* a, const DocumentBins* b) { return a->document_id < b->document_id; });
    for (std::size_t di : rng.sample_without_replacement(docs.size(), plan.per_org)) {
      const auto& doc = *docs[di];
      for (std::size_t b = 0; b < doc.bins.size(); ++b) {
        const auto& bin = doc.bins[b];
        if (bin.size() < plan.per_bin) {
          throw DataError("document '" + doc.document_id + "' bin " + std::to_string(b) + " has " +
                          std::to_string(bin.size()) + " candidates, needs " + std::to_string(plan.per_bin));
        }
        for (std::size_t ci : rng.sample_without_replacement(bin.size(), plan.per_bin)) {
          pairs.push_back({"", doc.document_id, bin[ci].utterance_id, b, bin[ci].score});
        }
      }
    }
  }
  rng.shuffle(pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "pair-%04zu", i + 1);
    pairs[i].pair_id = id;
  }
  return pairs;
}

double accuracy(std::span<const int> labels, std::span<const int> predictions) {
  check_lengths(labels, predictions, "accuracy");
  if (labels.empty()) throw InvalidArgument("accuracy: empty input");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) agree += labels[i] == predictions[i];
  return static_cast<double>(agree) / static_cast<double>(labels.size());
}

double f1(std::span<const int> labels, std::span<const int> predictions) {
  check_lengths(labels, predictions, "f1");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == 1;
    const bool pred = predictions[i] == 1;
    tp += truth && pred;
    fp += !truth && pred;
    fn += truth && !pred;
  }
  // 2PR / (P + R) reduced to counts, so the value is a correctly rounded rational.
  if (tp == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

double adjusted_rand_index(std::span<const int> labels, std::span<const int> predictions) {
  check_lengths(labels, predictions, "adjusted_rand_index");
  if (labels.size() < 2) throw InvalidArgument("adjusted_rand_index: need at least two items");

  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    cells[{labels[i], predictions[i]}] += 1.0;
    rows[labels[i]] += 1.0;
    cols[predictions[i]] += 1.0;
  }
  // Same partition up to renaming: each row and each column has exactly one non-empty cell.
  if (cells.size() == rows.size() && cells.size() == cols.size()) return 1.0;

  // (index - expected) / (max - expected) with expected = rows * cols / C(n, 2), multiplied
  // through by C(n, 2) so numerator and denominator stay integral (exact for n up to ~10^4).
  double index = 0.0, row_pairs = 0.0, col_pairs = 0.0;
  for (const auto& [cell, n] : cells) index += pairs_of(n);
  for (const auto& [r, n] : rows) row_pairs += pairs_of(n);
  for (const auto& [c, n] : cols) col_pairs += pairs_of(n);
  const double total_pairs = pairs_of(static_cast<double>(labels.size()));
  const double numerator = 2.0 * (total_pairs * index - row_pairs * col_pairs);
  const double denominator = total_pairs * (row_pairs + col_pairs) - 2.0 * row_pairs * col_pairs;
  if (denominator == 0.0) return 0.0;
  return numerator / denominator;
}

std::vector<double> default_grid() {
  std::vector<double> grid;
  grid.reserve(201);
  for (int i = 0; i <= 200; ++i) grid.push_back(i / 200.0);
  return grid;
}

CalibrationCurve threshold_sweep(std::span<const LabeledPair> pairs, Method method, std::span<const double> grid) {
  if (pairs.empty()) throw InvalidArgument("threshold_sweep: no labeled pairs");
  CalibrationCurve curve;
  curve.method = method;
  curve.thresholds.assign(grid.begin(), grid.end());
  std::vector<int> labels;
  std::vector<double> scores;
  for (const auto& p : pairs) {
    labels.push_back(p.label);
    scores.push_back(p.pair.score(method));
  }
  std::vector<int> predictions(pairs.size());
  for (double t : grid) {
    for (std::size_t i = 0; i < scores.size(); ++i) predictions[i] = scores[i] > t ? 1 : 0;
    curve.accuracy.push_back(accuracy(labels, predictions));
    curve.f1.push_back(f1(labels, predictions));
    curve.ari.push_back(labels.size() >= 2 ? adjusted_rand_index(labels, predictions) : 0.0);
  }
  auto best = [&](const std::vector<double>& metric) {
    if (metric.empty()) return 0.0;
    const auto it = std::max_element(metric.begin(), metric.end());
    return curve.thresholds[static_cast<std::size_t>(it - metric.begin())];
  };
  curve.best_accuracy_threshold = best(curve.accuracy);
  curve.best_f1_threshold = best(curve.f1);
  curve.best_ari_threshold = best(curve.ari);
  return curve;
}

LabelFile read_labels(std::istream& in) {
  csv::Reader reader(in);
  const std::size_t c_id = reader.column("pair_id");
  const std::size_t c1 = reader.column("coder1");
  const std::size_t c2 = reader.column("coder2");
  const std::size_t c_final = reader.column("final");
  const std::size_t width = std::max({c_id, c1, c2, c_final}) + 1;
  LabelFile out;
  std::unordered_map<std::string, std::size_t> seen;
  while (auto row = reader.next()) {
    const auto line = std::to_string(reader.line());
    if (row->size() < width) throw DataError("labels line " + line + ": too few columns");
    LabelRecord r{trim((*row)[c_id]), trim((*row)[c1]), trim((*row)[c2]), 0};
    const auto final_text = trim((*row)[c_final]);
    if (final_text != "0" && final_text != "1") {
      throw DataError("labels line " + line + ": final label must be 0 or 1, got '" + final_text + "'");
    }
    if (r.pair_id.empty()) throw DataError("labels line " + line + ": empty pair_id");
    if (!seen.emplace(r.pair_id, reader.line()).second) {
      throw DataError("labels line " + line + ": pair '" + r.pair_id + "' labelled more than once");
    }
    r.final_label = final_text == "1" ? 1 : 0;
    if (r.coder1 != r.coder2) ++out.disagreements;
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace echoscope::calibrate
