#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <set>
#include <string>
#include <vector>

#include "vrag/http.hpp"
#include "vrag/perception.hpp"
#include "vrag/trajectory.hpp"

namespace vrag {

struct CorpusDocument {
  ImageDocument image;
  std::string surrogate;  // synthetic caption scored by the simulated retriever
};

struct Corpus {
  std::string corpus_id;
  std::vector<CorpusDocument> documents;  // manifest order
  std::vector<QueryTask> tasks;
  /// Per-task query that retrieves its golden page (synthetic corpora only).
  std::map<std::string, std::string> oracle_queries;

  std::size_t size() const noexcept { return documents.size(); }
  const CorpusDocument* find(const std::string& doc_id) const;
  const QueryTask* find_task(const std::string& task_id) const;
  void validate() const;
};

/// Loads a corpus manifest (JSON). Image paths are resolved relative to the manifest.
Corpus load_corpus(const std::filesystem::path& manifest);
void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest);

struct SyntheticCorpusSpec {
  int documents = 50;
  int tasks = 10;
  int golden_per_task = 1;
  std::uint64_t seed = 7;
  std::int64_t min_side = 1200;
  std::int64_t max_side = 3200;
};

/// Seeded planted-answer corpus: each task's golden pages carry a unique key
/// phrase and the answer; every other page is filler.
Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

/// Writes a PNG per document under `dir` and points image_path at it.
void materialize_images(Corpus& corpus, const std::filesystem::path& dir, std::uint64_t seed);

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
  std::string image_url;  // remote results only
  bool operator==(const ScoredDoc&) const = default;
};

struct RetrievalResult {
  std::vector<ScoredDoc> results;
  std::string query;
  int top_k = 1;
};

std::vector<std::string> tokenize(std::string_view text);

/// Binary-set cosine overlap with seeded tie-breaking.
RetrievalResult search_simulated(const Corpus& corpus, const std::string& query, int top_k,
                                 std::uint64_t seed);

/// Membership indicator per position.
std::vector<int> relevance_labels(const std::vector<std::string>& result_ids,
                                  const std::set<std::string>& golden_doc_ids);

class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual RetrievalResult search(const std::string& query, int top_k) = 0;
  virtual ImageDocument document(const std::string& doc_id) = 0;
  virtual std::string identity() const = 0;
};

class SimulatedRetriever final : public Retriever {
 public:
  SimulatedRetriever(std::shared_ptr<const Corpus> corpus, std::uint64_t seed);
  RetrievalResult search(const std::string& query, int top_k) override;
  ImageDocument document(const std::string& doc_id) override;
  std::string identity() const override;
  const Corpus& corpus() const { return *corpus_; }

 private:
  std::shared_ptr<const Corpus> corpus_;
  std::uint64_t seed_;
};

struct RemoteSearchOptions {
  http::Options http;
  int max_in_flight = 8;
  std::filesystem::path image_cache_dir;  // empty: a temp directory
};

/// POST {query, top_k} -> {results: [{doc_id, score, image_url}]}.
RetrievalResult search_remote(const http::Endpoint& endpoint, const std::string& query, int top_k,
                              const http::Options& options);

class RemoteRetriever final : public Retriever {
 public:
  RemoteRetriever(std::string url, RemoteSearchOptions options);
  RetrievalResult search(const std::string& query, int top_k) override;
  ImageDocument document(const std::string& doc_id) override;
  std::string identity() const override { return "remote:" + endpoint_.url(); }

 private:
  void fetch_image(const ScoredDoc& doc);

  http::Endpoint endpoint_;
  RemoteSearchOptions options_;
  std::counting_semaphore<1024> in_flight_;
  std::mutex mutex_;
  std::map<std::string, ImageDocument> documents_;
};

}  // namespace vrag
