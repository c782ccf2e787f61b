#include "vrag/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_set>

#include "vrag/errors.hpp"
#include "vrag/hash.hpp"
#include "vrag/image.hpp"

namespace vrag {

const CorpusDocument* Corpus::find(const std::string& doc_id) const {
  auto it = std::find_if(documents.begin(), documents.end(),
                         [&](const CorpusDocument& d) { return d.image.doc_id == doc_id; });
  return it == documents.end() ? nullptr : &*it;
}

const QueryTask* Corpus::find_task(const std::string& task_id) const {
  auto it = std::find_if(tasks.begin(), tasks.end(), [&](const QueryTask& t) { return t.id == task_id; });
  return it == tasks.end() ? nullptr : &*it;
}

void Corpus::validate() const {
  if (documents.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus " + corpus_id + " has no documents");
  std::unordered_set<std::string> ids;
  for (const auto& d : documents) {
    if (!ids.insert(d.image.doc_id).second) {
      throw Error(ErrorCode::Config, "duplicate doc_id " + d.image.doc_id);
    }
    if (d.image.raw_width < 1 || d.image.raw_height < 1) {
      throw Error(ErrorCode::Config, "document " + d.image.doc_id + " has no raw size");
    }
  }
  for (const auto& t : tasks) {
    t.validate();
    for (const auto& g : t.golden_doc_ids) {
      if (!ids.count(g)) throw Error(ErrorCode::Config, "task " + t.id + " names unknown doc " + g);
    }
  }
}

Corpus load_corpus(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::Config, "corpus manifest not found: " + manifest.string());
  nlohmann::json j;
  const auto base = manifest.parent_path();
  Corpus c;
  try {
    j = nlohmann::json::parse(in);
    c.corpus_id = j.value("corpus_id", manifest.stem().string());
    for (const auto& jd : j.at("documents")) {
      CorpusDocument d;
      d.image.doc_id = jd.at("doc_id").get<std::string>();
      d.image.raw_width = jd.at("width").get<std::int64_t>();
      d.image.raw_height = jd.at("height").get<std::int64_t>();
      if (jd.contains("image_path") && !jd["image_path"].get<std::string>().empty()) {
        std::filesystem::path p = jd["image_path"].get<std::string>();
        d.image.image_path = p.is_absolute() ? p : base / p;
      }
      d.surrogate = jd.value("surrogate", "");
      c.documents.push_back(std::move(d));
    }
    if (j.contains("tasks")) {
      for (const auto& jt : j["tasks"]) {
        QueryTask t;
        t.id = jt.at("id").get<std::string>();
        t.question = jt.at("question").get<std::string>();
        t.golden_answer = jt.value("golden_answer", "");
        for (const auto& g : jt.value("golden_doc_ids", std::vector<std::string>{})) t.golden_doc_ids.insert(g);
        t.answer_only = jt.value("answer_only", false);
        t.corpus_id = c.corpus_id;
        if (jt.contains("oracle_query")) c.oracle_queries[t.id] = jt["oracle_query"].get<std::string>();
        c.tasks.push_back(std::move(t));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, "corpus manifest " + manifest.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : corpus.documents) {
    nlohmann::json jd = {{"doc_id", d.image.doc_id},
                         {"width", d.image.raw_width},
                         {"height", d.image.raw_height},
                         {"surrogate", d.surrogate}};
    if (!d.image.image_path.empty()) {
      jd["image_path"] = std::filesystem::relative(d.image.image_path, base.empty() ? "." : base).string();
    }
    docs.push_back(std::move(jd));
  }
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : corpus.tasks) {
    nlohmann::json jt = {{"id", t.id},
                         {"question", t.question},
                         {"golden_answer", t.golden_answer},
                         {"golden_doc_ids", t.golden_doc_ids},
                         {"answer_only", t.answer_only}};
    if (auto it = corpus.oracle_queries.find(t.id); it != corpus.oracle_queries.end()) {
      jt["oracle_query"] = it->second;
    }
    tasks.push_back(std::move(jt));
  }
  std::ofstream out(manifest);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + manifest.string());
  out << nlohmann::json{{"corpus_id", corpus.corpus_id}, {"documents", docs}, {"tasks", tasks}}.dump(2)
      << '\n';
}

namespace {

constexpr std::array<std::string_view, 64> kFiller = {
    "annual",   "report",   "overview", "market",  "segment",  "growth",   "regional", "summary",
    "chart",    "table",    "quarter",  "revenue", "margin",   "customer", "product",  "strategy",
    "slide",    "outlook",  "forecast", "budget",  "division", "analysis", "survey",   "index",
    "trend",    "volume",   "capacity", "supply",  "demand",   "pricing",  "network",  "channel",
    "energy",   "transport", "health",  "finance", "policy",   "program",  "project",  "system",
    "research", "design",   "quality",  "service", "partner",  "region",   "global",   "local",
    "north",    "south",    "east",     "west",    "urban",    "rural",    "staff",    "asset",
    "capital",  "return",   "risk",     "profile", "metric",   "target",   "baseline", "history"};

constexpr std::array<std::string_view, 16> kSyllables = {"zor", "vex", "tal", "mun", "kri", "dap",
                                                         "ulo", "fen", "gri", "sov", "lam", "quo",
                                                         "bex", "nir", "tup", "hal"};

std::string filler(std::mt19937_64& rng, int words) {
  std::string s;
  for (int i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += kFiller[rng() % kFiller.size()];
  }
  return s;
}

std::string made_up_word(std::mt19937_64& rng) {
  std::string w;
  for (int i = 0; i < 3; ++i) w += kSyllables[rng() % kSyllables.size()];
  return w;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  if (spec.documents < 1) throw Error(ErrorCode::Config, "synthetic corpus needs >= 1 document");
  if (spec.golden_per_task < 1 || spec.tasks * spec.golden_per_task > spec.documents) {
    throw Error(ErrorCode::Config, "not enough documents for the requested golden pages");
  }
  std::mt19937_64 rng(spec.seed);
  Corpus c;
  c.corpus_id = "synthetic-" + std::to_string(spec.seed);

  constexpr std::array<std::pair<int, int>, 3> kAspects = {{{4, 3}, {3, 4}, {1414, 1000}}};
  for (int i = 0; i < spec.documents; ++i) {
    CorpusDocument d;
    char id[32];
    std::snprintf(id, sizeof(id), "doc-%04d", i);
    d.image.doc_id = id;
    const auto span = std::max<std::int64_t>(1, spec.max_side - spec.min_side + 1);
    d.image.raw_width = spec.min_side + std::int64_t(rng() % std::uint64_t(span));
    auto [an, ad] = kAspects[rng() % kAspects.size()];
    d.image.raw_height = std::max<std::int64_t>(1, d.image.raw_width * ad / an);
    d.surrogate = filler(rng, 12);
    c.documents.push_back(std::move(d));
  }

  // Golden pages are drawn without replacement.
  std::vector<int> order(static_cast<std::size_t>(spec.documents));
  for (int i = 0; i < spec.documents; ++i) order[std::size_t(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  std::unordered_set<std::string> used_keys;
  std::size_t next = 0;
  for (int k = 0; k < spec.tasks; ++k) {
    std::string key;
    do {
      key = made_up_word(rng) + " " + made_up_word(rng);
    } while (!used_keys.insert(key).second);
    const std::string answer = std::to_string(10 + rng() % 9990);

    QueryTask t;
    char id[32];
    std::snprintf(id, sizeof(id), "task-%03d", k);
    t.id = id;
    t.question = "What figure is listed for " + key + "?";
    t.golden_answer = answer;
    t.corpus_id = c.corpus_id;
    for (int g = 0; g < spec.golden_per_task; ++g) {
      auto& doc = c.documents[std::size_t(order[next++])];
      doc.surrogate = filler(rng, 6) + " " + key + " figure " + (g == 0 ? answer : "pending") + " " +
                      filler(rng, 6);
      t.golden_doc_ids.insert(doc.image.doc_id);
    }
    c.oracle_queries[t.id] = key;
    c.tasks.push_back(std::move(t));
  }
  c.validate();
  return c;
}

void materialize_images(Corpus& corpus, const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (auto& d : corpus.documents) {
    std::mt19937_64 rng(derive_seed(seed, fnv1a64(d.image.doc_id)));
    Image img(int(d.image.raw_width), int(d.image.raw_height), 3);
    std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t(245));
    // A handful of solid blocks stands in for charts and tables.
    for (int b = 0; b < 6; ++b) {
      int x0 = int(rng() % std::uint64_t(img.width)), y0 = int(rng() % std::uint64_t(img.height));
      int x1 = std::min(img.width, x0 + 1 + int(rng() % std::uint64_t(img.width / 3 + 1)));
      int y1 = std::min(img.height, y0 + 1 + int(rng() % std::uint64_t(img.height / 3 + 1)));
      std::uint8_t col[3] = {std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
      for (int y = y0; y < y1; ++y) {
        auto* row = img.row(y);
        for (int x = x0; x < x1; ++x) std::copy(col, col + 3, row + x * 3);
      }
    }
    auto path = dir / (d.image.doc_id + ".png");
    save_png(img, path);
    d.image.image_path = path;
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(char(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

RetrievalResult search_simulated(const Corpus& corpus, const std::string& query, int top_k,
                                 std::uint64_t seed) {
  if (corpus.documents.empty()) throw Error(ErrorCode::EmptyCorpus, "simulated search on empty corpus");
  if (top_k < 1) throw Error(ErrorCode::Config, "top_k must be >= 1");
  auto qt = tokenize(query);
  std::set<std::string> q(qt.begin(), qt.end());

  struct Row {
    double score;
    std::uint64_t tie;
    const std::string* id;
  };
  std::vector<Row> rows;
  rows.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) {
    auto dt = tokenize(d.surrogate);
    std::set<std::string> ds(dt.begin(), dt.end());
    std::size_t common = 0;
    for (const auto& w : q) common += ds.count(w);
    double score = (q.empty() || ds.empty()) ? 0.0
                                             : double(common) / std::sqrt(double(q.size()) * double(ds.size()));
    rows.push_back({score, splitmix64(seed ^ fnv1a64(d.image.doc_id)), &d.image.doc_id});
  }
  const std::size_t k = std::min<std::size_t>(std::size_t(top_k), rows.size());
  std::partial_sort(rows.begin(), rows.begin() + std::ptrdiff_t(k), rows.end(), [](const Row& a, const Row& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tie != b.tie) return a.tie < b.tie;
    return *a.id < *b.id;
  });
  RetrievalResult r;
  r.query = query;
  r.top_k = top_k;
  for (std::size_t i = 0; i < k; ++i) r.results.push_back({*rows[i].id, rows[i].score, {}});
  return r;
}

std::vector<int> relevance_labels(const std::vector<std::string>& result_ids,
                                  const std::set<std::string>& golden_doc_ids) {
  std::vector<int> out;
  out.reserve(result_ids.size());
  for (const auto& id : result_ids) out.push_back(golden_doc_ids.count(id) ? 1 : 0);
  return out;
}

SimulatedRetriever::SimulatedRetriever(std::shared_ptr<const Corpus> corpus, std::uint64_t seed)
    : corpus_(std::move(corpus)), seed_(seed) {
  if (!corpus_ || corpus_->documents.empty()) throw Error(ErrorCode::EmptyCorpus, "no corpus");
}

RetrievalResult SimulatedRetriever::search(const std::string& query, int top_k) {
  return search_simulated(*corpus_, query, top_k, seed_);
}

ImageDocument SimulatedRetriever::document(const std::string& doc_id) {
  if (auto* d = corpus_->find(doc_id)) return d->image;
  throw Error(ErrorCode::Config, "unknown document " + doc_id);
}

std::string SimulatedRetriever::identity() const {
  return "simulated:" + corpus_->corpus_id + ":seed=" + std::to_string(seed_);
}

RetrievalResult search_remote(const http::Endpoint& endpoint, const std::string& query, int top_k,
                              const http::Options& options) {
  auto body = http::post_json(endpoint, {{"query", query}, {"top_k", top_k}}, options);
  if (!body.is_object() || !body.contains("results") || !body["results"].is_array()) {
    throw Error(ErrorCode::MalformedResponse, "search response lacks a results array");
  }
  RetrievalResult r;
  r.query = query;
  r.top_k = top_k;
  for (const auto& item : body["results"]) {
    if (!item.is_object() || !item.contains("doc_id") || !item["doc_id"].is_string()) {
      throw Error(ErrorCode::MalformedResponse, "search result without doc_id");
    }
    if (!item.contains("score") || !item["score"].is_number()) {
      throw Error(ErrorCode::MalformedResponse, "search result " + item["doc_id"].get<std::string>() +
                                                    " without numeric score");
    }
    r.results.push_back({item["doc_id"].get<std::string>(), item["score"].get<double>(),
                         item.value("image_url", std::string{})});
  }
  return r;
}

RemoteRetriever::RemoteRetriever(std::string url, RemoteSearchOptions options)
    : endpoint_(http::Endpoint::parse(url)),
      options_(std::move(options)),
      in_flight_(std::clamp(options_.max_in_flight, 1, 1024)) {
  if (options_.image_cache_dir.empty()) {
    options_.image_cache_dir = std::filesystem::temp_directory_path() / "vrag-image-cache";
  }
  std::filesystem::create_directories(options_.image_cache_dir);
}

RetrievalResult RemoteRetriever::search(const std::string& query, int top_k) {
  in_flight_.acquire();
  RetrievalResult r;
  try {
    r = search_remote(endpoint_, query, top_k, options_.http);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  for (const auto& doc : r.results) fetch_image(doc);
  return r;
}

void RemoteRetriever::fetch_image(const ScoredDoc& doc) {
  {
    std::lock_guard lock(mutex_);
    if (documents_.count(doc.doc_id)) return;
  }
  if (doc.image_url.empty()) throw Error(ErrorCode::MalformedResponse, doc.doc_id + " has no image_url");
  in_flight_.acquire();
  std::string bytes;
  try {
    bytes = http::get_bytes(doc.image_url, options_.http);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
  Image img;
  try {
    img = decode_image({data, bytes.size()});
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedResponse, "image for " + doc.doc_id + ": " + e.what());
  }
  auto path = options_.image_cache_dir / (sha256_hex(bytes) + ".img");
  if (!std::filesystem::exists(path)) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  std::lock_guard lock(mutex_);
  documents_.emplace(doc.doc_id, ImageDocument{doc.doc_id, img.width, img.height, path});
}

ImageDocument RemoteRetriever::document(const std::string& doc_id) {
  std::lock_guard lock(mutex_);
  if (auto it = documents_.find(doc_id); it != documents_.end()) return it->second;
  throw Error(ErrorCode::MalformedResponse, "document " + doc_id + " was never returned by the service");
}

}  // namespace vrag
