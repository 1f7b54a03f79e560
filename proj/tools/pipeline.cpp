#include "pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <spdlog/spdlog.h>

#include "echoscope/calibrate.hpp"
#include "echoscope/corpus.hpp"
#include "echoscope/csv.hpp"
#include "echoscope/embedder.hpp"
#include "echoscope/embedding_cache.hpp"
#include "echoscope/hashing.hpp"
#include "echoscope/remote_embedder.hpp"
#include "echoscope/textsim.hpp"
#include "echoscope/version.hpp"

namespace echoscope::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Workspace layout

struct Workspace {
  fs::path root;
  fs::path store() const { return root / "store"; }
  fs::path documents() const { return store() / "documents.jsonl"; }
  fs::path utterances() const { return store() / "utterances.jsonl"; }
  fs::path manifest() const { return store() / "manifest.json"; }
  fs::path cache() const { return root / "cache" / "embeddings.cache"; }
  fs::path calibration() const { return root / "calibration"; }
  fs::path reports() const { return root / "reports"; }
  // Relative to the output directory, so console output does not depend on where it lives.
  std::string show(const fs::path& p) const { return p.lexically_relative(root).generic_string(); }
};

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string utc_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return format_timestamp(ZonedTimestamp{std::chrono::time_point_cast<std::chrono::milliseconds>(now), 0});
}

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " " + path.string());
  return in;
}

// ---------------------------------------------------------------------------
// Provider and corpus loading

struct Runtime {
  textsim::StopWords stopwords;
  std::unique_ptr<embedder::EmbeddingProvider> provider;

  std::string provider_tag() const { return provider->provider_id() + "/" + provider->model_id(); }
};

std::unique_ptr<Runtime> make_runtime(const RunConfig& config) {
  auto rt = std::make_unique<Runtime>();
  rt->stopwords = config.stopwords.empty() ? textsim::StopWords::english() : textsim::StopWords::load(config.stopwords);
  if (config.provider == "reference") {
    embedder::ReferenceEmbedderOptions opts;
    if (config.dimension) opts.dimension = config.dimension;
    rt->provider = std::make_unique<embedder::ReferenceEmbedder>(opts, rt->stopwords);
  } else if (config.provider == "remote") {
    if (config.endpoint.empty()) throw ConfigError("--provider remote requires --endpoint");
    embedder::RemoteOptions opts;
    opts.endpoint = config.endpoint;
    opts.model_id = config.model;
    opts.dimension = config.dimension;
    opts.max_batch_size = config.batch_size;
    opts.max_attempts = config.max_attempts;
    opts.initial_backoff = std::chrono::milliseconds(config.backoff_ms);
    rt->provider = std::make_unique<embedder::RemoteEmbedder>(opts);
  } else {
    throw ConfigError("unknown provider '" + config.provider + "' (expected reference or remote)");
  }
  return rt;
}

struct Store {
  std::vector<corpus::Document> documents;
  corpus::UtteranceStore utterances;
};

Store load_store(const Workspace& ws) {
  if (!fs::exists(ws.manifest())) throw DataError("no corpus store under " + ws.root.string() + " (run ingest first)");
  Store s;
  auto docs = corpus::ingest_press_releases(ws.documents());
  auto utts = corpus::ingest_utterances(ws.utterances());
  if (!docs.report.errors.empty() || !utts.report.errors.empty()) {
    throw DataError("corpus store under " + ws.root.string() + " is inconsistent; re-run ingest");
  }
  s.documents = std::move(docs.documents);
  s.utterances = std::move(utts.store);
  auto in = open_input(ws.manifest(), "store manifest");
  const auto manifest = json::parse(in, nullptr, false);
  if (manifest.is_discarded()) throw DataError("unreadable store manifest " + ws.manifest().string());
  if (manifest.contains("coverage_start") && manifest.contains("coverage_end")) {
    const auto b = parse_date(manifest["coverage_start"].get<std::string>());
    const auto e = parse_date(manifest["coverage_end"].get<std::string>());
    if (!b || !e) throw DataError("bad coverage dates in store manifest");
    s.utterances.set_coverage(*b, *e);
  }
  return s;
}

struct EmbeddedCorpus {
  std::vector<embedder::EmbeddingVector> documents;  // empty vector: nothing to embed
  std::vector<std::vector<std::string>> units;
  std::optional<echo::UtteranceEmbeddings> utterances;
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::string digest;
};

EmbeddedCorpus embed_store(const Store& store, const Runtime& rt, const RunConfig& config, const Workspace& ws) {
  EmbeddedCorpus out;
  std::vector<std::string> texts;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& d : store.documents) {
    out.units.push_back(corpus::analysis_units(d, config.embed_title));
    ranges.emplace_back(texts.size(), out.units.back().size());
    texts.insert(texts.end(), out.units.back().begin(), out.units.back().end());
  }
  const std::size_t first_utterance = texts.size();
  for (const auto& u : store.utterances.all()) texts.push_back(u.text);

  fs::create_directories(ws.cache().parent_path());
  auto cache = embedder::EmbeddingCache::open(ws.cache());
  auto result = embedder::embed_corpus(*rt.provider, texts, cache);
  out.hits = result.hits;
  out.misses = result.misses;

  Sha256 digest;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    digest.update(embedder::CacheKey::for_text(*rt.provider, texts[i]).str());
    const auto& v = result.vectors[i];
    digest.update(std::span<const std::byte>(reinterpret_cast<const std::byte*>(v.data()), v.size() * sizeof(float)));
  }
  out.digest = digest.hex_digest();

  for (const auto& [start, count] : ranges) {
    if (count == 0) {
      out.documents.emplace_back();
      continue;
    }
    out.documents.push_back(embedder::mean_embedding(
        std::span<const embedder::EmbeddingVector>(result.vectors).subspan(start, count)));
  }
  std::vector<embedder::EmbeddingVector> utterance_vectors(
      std::make_move_iterator(result.vectors.begin() + static_cast<std::ptrdiff_t>(first_utterance)),
      std::make_move_iterator(result.vectors.end()));
  out.utterances.emplace(store.utterances, std::move(utterance_vectors));
  return out;
}

// ---------------------------------------------------------------------------
// Output metadata

std::vector<std::pair<std::string, std::string>> metadata(const RunConfig& config, const std::string& command,
                                                          const std::string& provider) {
  return {{"tool", std::string("echoscope ") + kVersion},
          {"command", command},
          {"config_digest", config_digest(config)},
          {"seed", std::to_string(config.seed)},
          {"provider", provider},
          {"config", effective_config_json(config)},
          {"generated_at", utc_now()}};
}

// Comment lines ahead of the CSV header; generated_at is always the last line.
void write_csv_header(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& meta,
                      const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  for (const auto& [k, v] : meta) {
    if (k != "generated_at") out << "# " << k << ": " << v << "\r\n";
  }
  for (const auto& [k, v] : extra) out << "# " << k << ": " << v << "\r\n";
  for (const auto& [k, v] : meta) {
    if (k == "generated_at") out << "# " << k << ": " << v << "\r\n";
  }
}

json metadata_json(const std::vector<std::pair<std::string, std::string>>& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta) j[k] = k == "config" ? json::parse(v) : json(v);
  return j;
}

json summary_json(const echo::EchoSummary& s, const RunConfig& config) {
  auto row = [](const std::optional<echo::PercentileRow>& r) -> json {
    if (!r) return nullptr;
    return {{"p50", r->p50}, {"p90", r->p90}, {"p95", r->p95}, {"p97", r->p97}, {"max", r->max}};
  };
  auto ranked = [](const std::vector<echo::RankedDocument>& items) {
    json a = json::array();
    for (const auto& r : items) a.push_back({{"document_id", r.document_id}, {"value", r.value}});
    return a;
  };
  json j;
  j["counts"] = {{"documents_total", s.documents_total},
                 {"documents_scored", s.documents_scored},
                 {"coverage_failures", s.coverage_failures},
                 {"undefined_failures", s.undefined_failures},
                 {"embedding_failures", s.embedding_failures},
                 {"no_similar_tweets", s.no_similar_count},
                 {"no_similar_fraction", s.no_similar_fraction},
                 {"with_similar_tweets", s.with_similar_count}};
  j["percentiles"] = {{"delta_raw", row(s.delta_raw)}, {"delta_prop", row(s.delta_prop)}};
  j["pearson"] = {{"r", s.pearson_r ? json(*s.pearson_r) : json(nullptr)},
                  {"p_value", s.pearson_p ? json(*s.pearson_p) : json(nullptr)},
                  {"permutations", config.permutations}};
  j["top"] = {{"delta_raw", ranked(s.top_raw)}, {"delta_prop", ranked(s.top_prop)}};
  j["window"] = {{"threshold", config.window.threshold},
                 {"pre_days", config.window.pre_days},
                 {"post_days", config.window.post_days},
                 {"include_release_in_post", config.window.include_release_in_post}};
  return j;
}

// Writes summary JSON with the metadata object last, so generated_at sits on the final lines.
void write_summary(std::ostream& out, const echo::EchoSummary& s, const RunConfig& config,
                   const std::vector<std::pair<std::string, std::string>>& meta) {
  nlohmann::ordered_json j;
  const auto body = summary_json(s, config);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = *it;
  auto m = metadata_json(meta);
  nlohmann::ordered_json ordered_meta;
  for (auto it = m.begin(); it != m.end(); ++it) {
    if (it.key() != "generated_at") ordered_meta[it.key()] = *it;
  }
  ordered_meta["generated_at"] = m["generated_at"];
  j["metadata"] = ordered_meta;
  out << j.dump(2) << '\n';
}

std::vector<double> sweep_grid(const RunConfig& config) {
  return config.grid.empty() ? calibrate::default_grid() : config.grid;
}

echo::SummaryOptions summary_options(const RunConfig& config) {
  return {config.top_k, config.permutations, config.seed};
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void apply_config_document(RunConfig& c, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "releases") c.releases = v.get<std::string>();
      else if (k == "utterances") c.utterances = v.get<std::string>();
      else if (k == "out_dir") c.out_dir = v.get<std::string>();
      else if (k == "labels") c.labels = v.get<std::string>();
      else if (k == "stopwords") c.stopwords = v.get<std::string>();
      else if (k == "provider") c.provider = v.get<std::string>();
      else if (k == "endpoint") c.endpoint = v.get<std::string>();
      else if (k == "model") c.model = v.get<std::string>();
      else if (k == "dimension") c.dimension = v.get<std::size_t>();
      else if (k == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (k == "max_attempts") c.max_attempts = v.get<int>();
      else if (k == "backoff_ms") c.backoff_ms = v.get<int>();
      else if (k == "threshold") c.window.threshold = v.get<double>();
      else if (k == "pre_days") c.window.pre_days = v.get<int>();
      else if (k == "post_days") c.window.post_days = v.get<int>();
      else if (k == "include_release") c.window.include_release_in_post = v.get<bool>();
      else if (k == "sensitivity") c.sensitivity = v.get<bool>();
      else if (k == "embed_title") c.embed_title = v.get<bool>();
      else if (k == "coverage_start" || k == "coverage_end") {
        const auto d = parse_date(v.get<std::string>());
        if (!d) throw ConfigError("config: " + k + " must be YYYY-MM-DD");
        (k == "coverage_start" ? c.coverage_start : c.coverage_end) = *d;
      }
      else if (k == "top_k") c.top_k = v.get<std::size_t>();
      else if (k == "permutations") c.permutations = v.get<std::size_t>();
      else if (k == "grid") {
        if (v.is_number_unsigned()) {
          const auto n = v.get<std::size_t>();
          if (n < 2) throw ConfigError("config: grid needs at least two points");
          c.grid.clear();
          for (std::size_t i = 0; i < n; ++i) c.grid.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
        } else {
          c.grid = v.get<std::vector<double>>();
        }
      }
      else if (k == "per_org") c.per_org = v.get<std::size_t>();
      else if (k == "per_bin") c.per_bin = v.get<std::size_t>();
      else if (k == "min_per_bin") c.min_per_bin = v.get<std::size_t>();
      else if (k == "relevant_days") c.relevant_days = v.get<int>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "workers") c.workers = v.get<std::size_t>();
      else throw ConfigError("config: unknown key '" + k + "'");
    }
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("config: wrong value type: ") + e.what());
  }
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RunConfig c;
  apply_config_document(c, text);
  return c;
}

std::string effective_config_json(const RunConfig& c) {
  json j;
  j["releases"] = c.releases.string();
  j["utterances"] = c.utterances.string();
  j["labels"] = c.labels.string();
  j["stopwords"] = c.stopwords.string();
  j["provider"] = c.provider;
  j["endpoint"] = c.endpoint;
  j["model"] = c.model;
  j["dimension"] = c.dimension;
  j["batch_size"] = c.batch_size;
  j["threshold"] = c.window.threshold;
  j["pre_days"] = c.window.pre_days;
  j["post_days"] = c.window.post_days;
  j["include_release"] = c.window.include_release_in_post;
  j["sensitivity"] = c.sensitivity;
  j["embed_title"] = c.embed_title;
  j["coverage_start"] = c.coverage_start ? format_date(*c.coverage_start) : "";
  j["coverage_end"] = c.coverage_end ? format_date(*c.coverage_end) : "";
  j["top_k"] = c.top_k;
  j["permutations"] = c.permutations;
  j["grid"] = c.grid.empty() ? json(201) : json(c.grid);
  j["per_org"] = c.per_org;
  j["per_bin"] = c.per_bin;
  j["min_per_bin"] = c.min_per_bin;
  j["relevant_days"] = c.relevant_days;
  j["seed"] = c.seed;
  return j.dump();
}

std::string config_digest(const RunConfig& config) { return sha256_hex(effective_config_json(config)); }

// ---------------------------------------------------------------------------
// ingest

namespace {
std::string describe(const corpus::RecordError& e) { return e.field.empty() ? e.reason : e.field + ": " + e.reason; }
}  // namespace

int cmd_ingest(const RunConfig& config, std::ostream& out) {
  if (config.releases.empty() || config.utterances.empty()) {
    throw ConfigError("ingest requires --releases and --utterances");
  }
  for (const auto& p : {config.releases, config.utterances}) {
    if (!fs::is_regular_file(p)) throw DataError("input file not found: " + p.string());
  }
  const Workspace ws{config.out_dir};
  auto docs = corpus::ingest_press_releases(config.releases);
  auto utts = corpus::ingest_utterances(config.utterances);
  if (config.coverage_start || config.coverage_end) {
    const auto b = config.coverage_start ? config.coverage_start : utts.store.coverage_begin();
    const auto e = config.coverage_end ? config.coverage_end : utts.store.coverage_end();
    if (!b || !e) throw ConfigError("coverage bounds need an utterance corpus or both explicit dates");
    utts.store.set_coverage(*b, *e);
  }

  // Build the store beside its final location and swap it in only when complete.
  const fs::path staging = ws.root / "store.partial";
  fs::remove_all(staging);
  fs::create_directories(staging);
  {
    auto o = open_output(staging / "documents.jsonl");
    corpus::write_documents(o, docs.documents);
  }
  {
    auto o = open_output(staging / "utterances.jsonl");
    corpus::write_utterances(o, utts.store);
  }
  {
    auto o = open_output(staging / "release_errors.csv");
    corpus::write_error_report(o, docs.report);
  }
  {
    auto o = open_output(staging / "utterance_errors.csv");
    corpus::write_error_report(o, utts.report);
  }
  {
    json m;
    m["tool"] = std::string("echoscope ") + kVersion;
    m["documents"] = docs.documents.size();
    m["utterances"] = utts.store.size();
    m["days"] = utts.store.day_index().size();
    if (const auto b = utts.store.coverage_begin()) m["coverage_start"] = format_date(*b);
    if (const auto e = utts.store.coverage_end()) m["coverage_end"] = format_date(*e);
    auto o = open_output(staging / "manifest.json");
    o << m.dump(2) << '\n';
  }
  fs::remove_all(ws.store());
  fs::rename(staging, ws.store());

  out << "documents: " << docs.documents.size() << " (" << docs.report.errors.size() << " rejected, "
      << docs.report.warnings.size() << " warnings)\n";
  out << "utterances: " << utts.store.size() << " (" << utts.report.errors.size() << " rejected)\n";
  for (const auto& e : docs.report.errors) {
    out << "  " << config.releases.string() << ":" << e.line << ": " << describe(e) << '\n';
  }
  for (const auto& e : utts.report.errors) {
    out << "  " << config.utterances.string() << ":" << e.line << ": " << describe(e) << '\n';
  }
  out << "store: " << ws.show(ws.store()) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// embed

int cmd_embed(const RunConfig& config, std::ostream& out) {
  const Workspace ws{config.out_dir};
  const auto rt = make_runtime(config);
  const auto store = load_store(ws);
  const auto embedded = embed_store(store, *rt, config, ws);
  const std::size_t total = embedded.hits + embedded.misses;
  out << "provider: " << rt->provider_tag() << '\n';
  out << "texts: " << total << '\n';
  out << "cache hits: " << embedded.hits << '\n';
  out << "cache misses: " << embedded.misses << '\n';
  out << "hit rate: " << (total ? number(static_cast<double>(embedded.hits) / static_cast<double>(total)) : "1")
      << '\n';
  out << "digest: " << embedded.digest << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// calibrate

namespace {

struct ScoreRow {
  calibrate::ScoredPair pair;
  std::string pair_id;
};

int calibrate_sample(const RunConfig& config, std::ostream& out) {
  const Workspace ws{config.out_dir};
  const auto rt = make_runtime(config);
  const auto store = load_store(ws);
  const auto embedded = embed_store(store, *rt, config, ws);
  const auto& utts = *embedded.utterances;
  const auto edges = calibrate::default_bin_edges();

  auto relevant_indices = [&](Date release) {
    std::vector<std::size_t> idx;
    for (int d = -config.relevant_days; d <= config.relevant_days; ++d) {
      for (std::size_t i : store.utterances.on_day(release + std::chrono::days{d})) idx.push_back(i);
    }
    return idx;
  };

  std::map<std::string, std::vector<std::size_t>> counts;
  std::map<std::string, std::vector<std::vector<calibrate::Candidate>>> bins_by_doc;
  for (std::size_t di = 0; di < store.documents.size(); ++di) {
    const auto& doc = store.documents[di];
    const auto& vec = embedded.documents[di];
    if (vec.empty()) continue;
    const double norm = std::sqrt(std::inner_product(vec.begin(), vec.end(), vec.begin(), 0.0, std::plus<>(),
                                                     [](float a, float b) { return double(a) * double(b); }));
    std::vector<calibrate::Candidate> candidates;
    for (std::size_t ui : relevant_indices(doc.release_date)) {
      candidates.push_back({store.utterances[ui].id, store.utterances[ui].text, utts.cosine(vec, norm, ui)});
    }
    auto bins = calibrate::bin_candidates(candidates, edges);
    std::vector<std::size_t> c;
    for (const auto& b : bins) c.push_back(b.size());
    counts[doc.id] = std::move(c);
    bins_by_doc[doc.id] = std::move(bins);
  }
  const auto eligible = calibrate::eligible_documents(counts, config.min_per_bin);

  std::map<std::string, std::size_t> per_org;
  for (const auto& d : store.documents) per_org[d.org] += eligible.contains(d.id) ? 1 : 0;
  std::string deficits;
  for (const auto& [org, n] : per_org) {
    if (n < config.per_org) {
      deficits += (deficits.empty() ? "" : ", ") + org + " (" + std::to_string(n) + "/" +
                  std::to_string(config.per_org) + ")";
    }
  }
  if (!deficits.empty()) throw DataError("insufficient eligible documents: " + deficits);

  std::vector<calibrate::DocumentBins> pool;
  std::map<std::string, std::size_t> doc_index;
  for (std::size_t di = 0; di < store.documents.size(); ++di) {
    const auto& d = store.documents[di];
    doc_index[d.id] = di;
    if (eligible.contains(d.id)) pool.push_back({d.id, d.org, bins_by_doc[d.id]});
  }
  const auto sampled = calibrate::sample_label_pairs(pool, {config.per_org, config.per_bin, config.seed});

  // TF-IDF is fitted over every document unit plus the utterances relevant to the sampled documents.
  std::vector<std::vector<textsim::TokenList>> unit_tokens(store.documents.size());
  std::vector<textsim::TokenList> fit_texts;
  for (std::size_t di = 0; di < store.documents.size(); ++di) {
    for (const auto& u : embedded.units[di]) {
      unit_tokens[di].push_back(textsim::tokenize_and_stem(u, rt->stopwords));
      fit_texts.push_back(unit_tokens[di].back());
    }
  }
  std::set<std::size_t> relevant;
  std::set<std::string> sampled_docs;
  for (const auto& p : sampled) sampled_docs.insert(p.document_id);
  for (const auto& id : sampled_docs) {
    for (std::size_t ui : relevant_indices(store.documents[doc_index[id]].release_date)) relevant.insert(ui);
  }
  for (std::size_t ui : relevant) fit_texts.push_back(textsim::tokenize_and_stem(store.utterances[ui].text, rt->stopwords));
  const auto model = textsim::fit_tfidf(fit_texts);

  auto meta = metadata(config, "calibrate", rt->provider_tag());
  const std::vector<std::pair<std::string, std::string>> scope{
      {"tfidf_scope", "document_units=" + std::to_string(fit_texts.size() - relevant.size()) +
                          " relevant_utterances=" + std::to_string(relevant.size()) +
                          " vocabulary=" + std::to_string(model.vocabulary_size())}};

  auto export_out = open_output(ws.calibration() / "label_pairs.csv");
  auto scores_out = open_output(ws.calibration() / "pair_scores.csv");
  write_csv_header(export_out, meta);
  write_csv_header(scores_out, meta, scope);
  csv::write_row(export_out, {"pair_id", "document_id", "utterance_id", "document_text", "utterance_text"});
  csv::write_row(scores_out, {"pair_id", "document_id", "utterance_id", "bin", "embedding", "tfidf", "jaccard"});
  for (const auto& p : sampled) {
    const std::size_t di = doc_index.at(p.document_id);
    const auto& doc = store.documents[di];
    const auto ui = *store.utterances.find(p.utterance_id);
    const auto& utt = store.utterances[ui];
    const auto utt_tokens = textsim::tokenize_and_stem(utt.text, rt->stopwords);
    const double tf = textsim::lexical_doc_similarity(textsim::LexicalMethod::tfidf, unit_tokens[di], utt_tokens, &model);
    const double jc = textsim::lexical_doc_similarity(textsim::LexicalMethod::jaccard, unit_tokens[di], utt_tokens);
    std::string doc_text = doc.title.empty() ? doc.body : doc.title + "\n" + doc.body;
    csv::write_row(export_out, {p.pair_id, p.document_id, p.utterance_id, doc_text, utt.text});
    csv::write_row(scores_out, {p.pair_id, p.document_id, p.utterance_id, std::to_string(p.bin),
                                number(p.embedding_score), number(tf), number(jc)});
  }
  {
    auto dump = open_output(ws.calibration() / "tfidf_model.tsv");
    model.dump(dump);
  }
  out << "eligible documents: " << eligible.size() << " of " << store.documents.size() << '\n';
  out << "sampled pairs: " << sampled.size() << '\n';
  out << "export: " << ws.show(ws.calibration() / "label_pairs.csv") << '\n';
  return kOk;
}

int calibrate_sweep(const RunConfig& config, std::ostream& out) {
  const Workspace ws{config.out_dir};
  const auto scores_path = ws.calibration() / "pair_scores.csv";
  auto scores_in = open_input(scores_path, "pair scores (run calibrate without --labels first)");
  csv::Reader reader(scores_in);
  const auto c_id = reader.column("pair_id"), c_doc = reader.column("document_id"),
             c_utt = reader.column("utterance_id"), c_emb = reader.column("embedding"),
             c_tf = reader.column("tfidf"), c_jc = reader.column("jaccard");
  std::map<std::string, calibrate::ScoredPair> pairs;
  std::vector<std::string> order;
  auto parse_double = [&](const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw DataError(scores_path.string() + ":" + std::to_string(reader.line()) + ": bad number '" + s + "'");
    }
    return v;
  };
  while (auto row = reader.next()) {
    calibrate::ScoredPair p{row->at(c_doc), row->at(c_utt), parse_double(row->at(c_emb)), parse_double(row->at(c_tf)),
                            parse_double(row->at(c_jc))};
    order.push_back(row->at(c_id));
    pairs.emplace(row->at(c_id), std::move(p));
  }

  auto labels_in = open_input(config.labels, "labels file");
  const auto labels = calibrate::read_labels(labels_in);
  std::map<std::string, int> label_of;
  for (const auto& r : labels.records) {
    if (!pairs.contains(r.pair_id)) throw DataError("labels reference unknown pair_id '" + r.pair_id + "'");
    label_of[r.pair_id] = r.final_label;
  }
  std::vector<calibrate::LabeledPair> labeled;
  for (const auto& id : order) {
    const auto it = label_of.find(id);
    if (it == label_of.end()) throw DataError("pair '" + id + "' has no label");
    labeled.push_back({pairs.at(id), it->second});
  }

  const auto grid = sweep_grid(config);
  auto meta = metadata(config, "calibrate", config.provider);
  auto curve_out = open_output(ws.calibration() / "curve.csv");
  auto best_out = open_output(ws.calibration() / "best_thresholds.csv");
  const std::vector<std::pair<std::string, std::string>> extra{
      {"pairs", std::to_string(labeled.size())}, {"coder_disagreements", std::to_string(labels.disagreements)}};
  write_csv_header(curve_out, meta, extra);
  write_csv_header(best_out, meta, extra);
  csv::write_row(curve_out, {"threshold", "method", "accuracy", "f1", "ari"});
  csv::write_row(best_out, {"method", "metric", "threshold", "value"});
  for (const auto method : calibrate::kAllMethods) {
    const auto curve = calibrate::threshold_sweep(labeled, method, grid);
    const std::string name(calibrate::to_string(method));
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
      csv::write_row(curve_out, {number(curve.thresholds[i]), name, number(curve.accuracy[i]), number(curve.f1[i]),
                                 number(curve.ari[i])});
    }
    auto emit = [&](const char* metric, double t, const std::vector<double>& values) {
      const auto idx = static_cast<std::size_t>(std::find(curve.thresholds.begin(), curve.thresholds.end(), t) -
                                                curve.thresholds.begin());
      csv::write_row(best_out, {name, metric, number(t), number(values[idx])});
      out << name << " best " << metric << ": " << number(values[idx]) << " at threshold " << number(t) << '\n';
    };
    emit("accuracy", curve.best_accuracy_threshold, curve.accuracy);
    emit("f1", curve.best_f1_threshold, curve.f1);
    emit("ari", curve.best_ari_threshold, curve.ari);
  }
  out << "curve: " << ws.show(ws.calibration() / "curve.csv") << '\n';
  return kOk;
}

}  // namespace

int cmd_calibrate(const RunConfig& config, std::ostream& out) {
  return config.labels.empty() ? calibrate_sample(config, out) : calibrate_sweep(config, out);
}

// ---------------------------------------------------------------------------
// echo

int cmd_echo(const RunConfig& config, std::ostream& out) {
  config.window.validate();
  const Workspace ws{config.out_dir};
  const auto rt = make_runtime(config);
  const auto store = load_store(ws);
  const auto embedded = embed_store(store, *rt, config, ws);
  const auto result = echo::batch_echo(store.documents, embedded.documents, *embedded.utterances, config.window,
                                       summary_options(config), config.workers);
  const auto meta = metadata(config, "echo", rt->provider_tag());

  std::map<std::string, const corpus::Document*> docs;
  for (const auto& d : store.documents) docs[d.id] = &d;

  {
    auto o = open_output(ws.reports() / "echo_report.csv");
    write_csv_header(o, meta);
    csv::write_row(o, {"document_id", "org", "release_date", "delta_raw", "delta_prop", "no_similar_tweets",
                       "excluded_zero_volume_days"});
    for (const auto& s : result.scores) {
      const auto& d = *docs.at(s.document_id);
      csv::write_row(o, {s.document_id, d.org, format_date(d.release_date), number(s.delta_raw), number(s.delta_prop),
                         s.flags.no_similar_tweets ? "true" : "false",
                         std::to_string(s.flags.excluded_zero_volume_days)});
    }
  }
  {
    auto o = open_output(ws.reports() / "echo_daily.csv");
    write_csv_header(o, meta);
    csv::write_row(o, {"document_id", "day", "similar_count", "total_count"});
    for (const auto& s : result.scores) {
      for (const auto* window : {&s.pre, &s.post}) {
        for (const auto& c : *window) {
          csv::write_row(o, {s.document_id, format_date(c.day), std::to_string(c.similar_count),
                             std::to_string(c.total_count)});
        }
      }
    }
  }
  {
    auto o = open_output(ws.reports() / "coverage.csv");
    write_csv_header(o, meta);
    csv::write_row(o, {"document_id", "kind", "message", "missing_days"});
    for (const auto& f : result.failures) {
      std::string days;
      for (const auto& d : f.missing_days) days += (days.empty() ? "" : ";") + d;
      csv::write_row(o, {f.document_id, std::string(echo::to_string(f.kind)), f.message, days});
    }
  }
  {
    auto o = open_output(ws.reports() / "summary.json");
    write_summary(o, result.summary, config, meta);
  }
  if (config.sensitivity) {
    auto o = open_output(ws.reports() / "sensitivity.csv");
    write_csv_header(o, meta);
    csv::write_row(o, {"document_id", "pre_days", "post_days", "delta_raw", "delta_prop"});
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < store.documents.size(); ++i) {
      const auto& d = store.documents[i];
      if (embedded.documents[i].empty()) continue;
      try {
        const auto m = echo::window_sensitivity(d, embedded.documents[i], *embedded.utterances, config.window);
        for (const auto& row : m) {
          for (const auto& cell : row) {
            csv::write_row(o, {d.id, std::to_string(cell.pre_days), std::to_string(cell.post_days),
                               number(cell.delta_raw), cell.delta_prop ? number(*cell.delta_prop) : ""});
          }
        }
      } catch (const CoverageError&) {
        ++skipped;
      }
    }
    out << "sensitivity: " << (ws.reports() / "sensitivity.csv").string() << " (" << skipped
        << " documents lack 7-day coverage)\n";
  }

  out << "scored: " << result.summary.documents_scored << " of " << result.summary.documents_total << '\n';
  out << "no similar tweets: " << result.summary.no_similar_count << '\n';
  out << "failures: " << result.failures.size() << '\n';
  out << "reports: " << ws.show(ws.reports()) << '\n';
  return result.scores.empty() ? kData : kOk;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const RunConfig& config, std::ostream& out) {
  const Workspace ws{config.out_dir};
  const auto path = ws.reports() / "echo_report.csv";
  auto in = open_input(path, "echo report (run echo first)");
  csv::Reader reader(in);
  const auto c_id = reader.column("document_id"), c_raw = reader.column("delta_raw"),
             c_prop = reader.column("delta_prop"), c_none = reader.column("no_similar_tweets");
  std::vector<echo::EchoScore> scores;
  while (auto row = reader.next()) {
    echo::EchoScore s;
    s.document_id = row->at(c_id);
    try {
      s.delta_raw = std::stod(row->at(c_raw));
      s.delta_prop = std::stod(row->at(c_prop));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(reader.line()) + ": bad delta value");
    }
    s.flags.no_similar_tweets = row->at(c_none) == "true";
    scores.push_back(std::move(s));
  }
  std::vector<echo::EchoFailure> failures;
  if (auto cov = std::ifstream(ws.reports() / "coverage.csv"); cov) {
    csv::Reader cr(cov);
    const auto f_id = cr.column("document_id"), f_kind = cr.column("kind");
    while (auto row = cr.next()) {
      echo::EchoFailure f;
      f.document_id = row->at(f_id);
      const auto& kind = row->at(f_kind);
      f.kind = kind == "undefined" ? echo::EchoFailure::Kind::undefined
               : kind == "embedding" ? echo::EchoFailure::Kind::embedding
                                     : echo::EchoFailure::Kind::coverage;
      failures.push_back(std::move(f));
    }
  }
  const auto summary = echo::summarize(scores, failures, summary_options(config));
  auto j = summary_json(summary, config);
  j.erase("window");
  out << j.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Command line

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"echoscope: measure the echo of reference communications in timestamped utterance streams"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, provider, endpoint, model, out_dir, releases, utterances, labels, stopwords;
  std::string coverage_start, coverage_end;
  double threshold = 0;
  int pre_days = 0, post_days = 0, max_attempts = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 0, dimension = 0, permutations = 0, top_k = 0, batch = 0;

  auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
  auto* o_provider = app.add_option("--provider", provider, "Embedding provider")->check(CLI::IsMember({"reference", "remote"}));
  auto* o_endpoint = app.add_option("--endpoint", endpoint, "Embedding service URL for --provider remote");
  auto* o_model = app.add_option("--model", model, "Expected remote model id");
  auto* o_dim = app.add_option("--dim", dimension, "Embedding dimension");
  auto* o_batch = app.add_option("--batch-size", batch, "Remote batch size");
  auto* o_attempts = app.add_option("--max-attempts", max_attempts, "Remote attempts before giving up");
  auto* o_threshold = app.add_option("--threshold", threshold, "Similarity threshold (strict)");
  auto* o_pre = app.add_option("--pre-days", pre_days, "Pre-release window size in days");
  auto* o_post = app.add_option("--post-days", post_days, "Post-release window size in days");
  auto* f_include = app.add_flag("--include-release", "Count the release day in the post window (default)");
  auto* f_exclude = app.add_flag("--exclude-release", "Start the post window the day after release");
  f_include->excludes(f_exclude);
  auto* f_sensitivity = app.add_flag("--sensitivity", "Also compute the 3x3 window-sensitivity matrix");
  auto* o_seed = app.add_option("--seed", seed, "Sampling and permutation seed");
  auto* o_out = app.add_option("--out-dir", out_dir, "Workspace directory");
  auto* o_workers = app.add_option("--workers", workers, "Worker threads (0 = all cores)");
  auto* o_releases = app.add_option("--releases", releases, "Press-release JSONL file");
  auto* o_utterances = app.add_option("--utterances", utterances, "Utterance JSONL file");
  auto* o_labels = app.add_option("--labels", labels, "Label CSV (calibrate sweep mode)");
  auto* o_stopwords = app.add_option("--stopwords", stopwords, "Stop-word list, one token per line");
  auto* o_perm = app.add_option("--permutations", permutations, "Permutations for the Pearson p-value");
  auto* o_topk = app.add_option("--top-k", top_k, "Top documents listed in summaries");
  auto* o_cov_b = app.add_option("--coverage-start", coverage_start, "First collected day (YYYY-MM-DD)");
  auto* o_cov_e = app.add_option("--coverage-end", coverage_end, "Last collected day (YYYY-MM-DD)");

  auto* s_ingest = app.add_subcommand("ingest", "Ingest press releases and utterances into a store");
  auto* s_embed = app.add_subcommand("embed", "Embed all store texts into the cache");
  auto* s_calibrate = app.add_subcommand("calibrate", "Export pairs for labelling, or sweep thresholds given labels");
  auto* s_echo = app.add_subcommand("echo", "Compute echo reports");
  auto* s_report = app.add_subcommand("report", "Summarise an existing echo report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    (void)o_config;
    if (o_provider->count()) c.provider = provider;
    if (o_endpoint->count()) c.endpoint = endpoint;
    if (o_model->count()) c.model = model;
    if (o_dim->count()) c.dimension = dimension;
    if (o_batch->count()) c.batch_size = batch;
    if (o_attempts->count()) c.max_attempts = max_attempts;
    if (o_threshold->count()) c.window.threshold = threshold;
    if (o_pre->count()) c.window.pre_days = pre_days;
    if (o_post->count()) c.window.post_days = post_days;
    if (f_include->count()) c.window.include_release_in_post = true;
    if (f_exclude->count()) c.window.include_release_in_post = false;
    if (f_sensitivity->count()) c.sensitivity = true;
    if (o_seed->count()) c.seed = seed;
    if (o_out->count()) c.out_dir = out_dir;
    if (o_workers->count()) c.workers = workers;
    if (o_releases->count()) c.releases = releases;
    if (o_utterances->count()) c.utterances = utterances;
    if (o_labels->count()) c.labels = labels;
    if (o_stopwords->count()) c.stopwords = stopwords;
    if (o_perm->count()) c.permutations = permutations;
    if (o_topk->count()) c.top_k = top_k;
    for (auto [opt, text, target] : {std::tuple{o_cov_b, &coverage_start, &c.coverage_start},
                                     std::tuple{o_cov_e, &coverage_end, &c.coverage_end}}) {
      if (!opt->count()) continue;
      const auto d = parse_date(*text);
      if (!d) throw ConfigError(opt->get_name() + " must be YYYY-MM-DD");
      *target = *d;
    }
    try {
      c.window.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }

    if (s_ingest->parsed()) return cmd_ingest(c, out);
    if (s_embed->parsed()) return cmd_embed(c, out);
    if (s_calibrate->parsed()) return cmd_calibrate(c, out);
    if (s_echo->parsed()) return cmd_echo(c, out);
    if (s_report->parsed()) return cmd_report(c, out);
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << '\n';
    return kTransport;
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what() << '\n';
    return kTransport;
  } catch (const ServiceError& e) {
    err << "service error: " << e.what() << '\n';
    return kTransport;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace echoscope::cli
