#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "reagent/errors.hpp"
#include "json.hpp"

namespace reagent {

using json = nlohmann::json;

struct Document {
  std::string id;
  std::string title;
  std::string text;
};

enum class Channel { Sparse, Dense, Fused };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Sparse: return "sparse";
    case Channel::Dense: return "dense";
    case Channel::Fused: return "fused";
  }
  return "unknown";
}

struct EvidenceHit {
  std::string doc_id;
  double score = 0.0;
  int rank = 0;  // 1-based, no gaps within a result list
  Channel channel = Channel::Fused;
};

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 2.
std::vector<std::string> tokenize(std::string_view text);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const std::string& text) const = 0;
};

/// Deterministic test embedder: token bag hashed (FNV-1a) into a fixed-width
/// count vector, L2-normalized. Not a faithful stand-in for a learned model.
class HashedBagEmbedder : public Embedder {
 public:
  explicit HashedBagEmbedder(std::size_t dim = 64) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(const std::string& text) const override;

 private:
  std::size_t dim_;
};

/// Reciprocal-rank fusion: score(d) = sum over lists of 1/(k_rrf + rank(d)),
/// descending, ties broken by ascending doc id. Ranks are reassigned 1..n.
std::vector<EvidenceHit> rrf_fuse(
    const std::vector<std::vector<EvidenceHit>>& lists, int k_rrf);

/// Immutable two-channel index over a document corpus.
class SearchIndex {
 public:
  static constexpr double kBm25K1 = 1.2;
  static constexpr double kBm25B = 0.75;

  /// Builds both channels; DuplicateDocId / EmptyCorpus on bad input.
  static SearchIndex ingest(std::vector<Document> corpus,
                            std::shared_ptr<const Embedder> embedder = {});

  /// Newline-delimited JSON: {"id":...,"title":...,"text":...} per line.
  static std::vector<Document> load_corpus(std::istream& in);
  static std::vector<Document> load_corpus_file(const std::string& path);

  std::size_t size() const { return docs_.size(); }
  const Document* doc(const std::string& id) const;
  std::vector<std::string> doc_ids() const;

  /// Top-k by BM25, descending, ties by ascending doc id. Zero-score
  /// documents are not returned.
  std::vector<EvidenceHit> sparse_query(
      const std::string& q, int k,
      const std::set<std::string>& excluded = {}) const;

  /// Top-k by cosine similarity against the embedder's vectors.
  std::vector<EvidenceHit> dense_query(
      const std::string& q, int k,
      const std::set<std::string>& excluded = {}) const;

  /// First M of rrf_fuse(sparse, dense) over k_cand candidates per channel.
  std::vector<EvidenceHit> retrieve(
      const std::string& q, int m, int k_rrf = 60, int k_cand = 20,
      const std::set<std::string>& excluded = {}) const;

  /// Re-runs retrieval for one sub-question with the invalidated documents
  /// excluded from both candidate channels. The index is immutable, so
  /// stored results for other sub-questions cannot be affected.
  std::vector<EvidenceHit> invalidate_and_requery(
      const std::string& q, const std::set<std::string>& invalidated, int m,
      int k_rrf = 60, int k_cand = 20) const {
    return retrieve(q, m, k_rrf, k_cand, invalidated);
  }

 private:
  struct Posting {
    std::size_t doc = 0;
    int tf = 0;
  };

  std::vector<Document> docs_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<int> doc_len_;
  double avg_len_ = 0.0;
  std::vector<std::vector<double>> vectors_;
  std::shared_ptr<const Embedder> embedder_;
};

}  // namespace reagent
