#include "reagent/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace reagent {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      if (cur.size() >= 2) tokens.push_back(cur);
      cur.clear();
    }
  }
  if (cur.size() >= 2) tokens.push_back(cur);
  return tokens;
}

namespace {

// FNV-1a; std::hash is implementation-defined, this must be stable.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void assign_ranks(std::vector<EvidenceHit>& hits) {
  for (std::size_t i = 0; i < hits.size(); ++i)
    hits[i].rank = static_cast<int>(i) + 1;
}

}  // namespace

std::vector<double> HashedBagEmbedder::embed(const std::string& text) const {
  std::vector<double> v(dim_, 0.0);
  for (const auto& tok : tokenize(text)) v[fnv1a(tok) % dim_] += 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<EvidenceHit> rrf_fuse(
    const std::vector<std::vector<EvidenceHit>>& lists, int k_rrf) {
  for (const auto& list : lists)
    for (std::size_t i = 0; i < list.size(); ++i)
      if (list[i].rank != static_cast<int>(i) + 1)
        raise(Err::InvalidArgument, "input list ranks must be 1..n");
  std::map<std::string, double> score;
  for (const auto& list : lists)
    for (const auto& hit : list)
      score[hit.doc_id] += 1.0 / (k_rrf + hit.rank);
  std::vector<EvidenceHit> fused;
  fused.reserve(score.size());
  for (const auto& [id, s] : score)
    fused.push_back(EvidenceHit{id, s, 0, Channel::Fused});
  std::stable_sort(fused.begin(), fused.end(),
                   [](const EvidenceHit& a, const EvidenceHit& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.doc_id < b.doc_id;
                   });
  assign_ranks(fused);
  return fused;
}

SearchIndex SearchIndex::ingest(std::vector<Document> corpus,
                                std::shared_ptr<const Embedder> embedder) {
  if (corpus.empty()) raise(Err::EmptyCorpus, "no documents supplied");
  SearchIndex idx;
  idx.embedder_ =
      embedder ? std::move(embedder) : std::make_shared<HashedBagEmbedder>();
  idx.docs_ = std::move(corpus);
  double total_len = 0.0;
  for (std::size_t d = 0; d < idx.docs_.size(); ++d) {
    const Document& doc = idx.docs_[d];
    if (doc.id.empty()) raise(Err::InvalidArgument, "document without id");
    if (!idx.by_id_.emplace(doc.id, d).second)
      raise(Err::DuplicateDocId, "duplicate document id '" + doc.id + "'");
    const std::string body = doc.title + " " + doc.text;
    const auto tokens = tokenize(body);
    idx.doc_len_.push_back(static_cast<int>(tokens.size()));
    total_len += static_cast<double>(tokens.size());
    std::map<std::string, int> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, n] : tf)
      idx.postings_[term].push_back(Posting{d, n});
    try {
      idx.vectors_.push_back(idx.embedder_->embed(body));
    } catch (const std::exception& e) {
      raise(Err::EmbedderFailure,
            "embedding '" + doc.id + "': " + e.what());
    }
  }
  idx.avg_len_ = total_len / static_cast<double>(idx.docs_.size());
  return idx;
}

std::vector<Document> SearchIndex::load_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      Document d;
      d.id = j.at("id").get<std::string>();
      d.title = j.value("title", std::string{});
      d.text = j.at("text").get<std::string>();
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      raise(Err::ParseError,
            "corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<Document> SearchIndex::load_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::ParseError, "cannot open corpus file " + path);
  return load_corpus(in);
}

const Document* SearchIndex::doc(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::vector<std::string> SearchIndex::doc_ids() const {
  std::vector<std::string> out;
  out.reserve(by_id_.size());
  for (const auto& [id, _] : by_id_) out.push_back(id);
  return out;
}

std::vector<EvidenceHit> SearchIndex::sparse_query(
    const std::string& q, int k, const std::set<std::string>& excluded) const {
  if (k < 1) raise(Err::InvalidArgument, "k must be >= 1");
  const auto tokens = tokenize(q);
  std::set<std::string> terms(tokens.begin(), tokens.end());
  const double n_docs = static_cast<double>(docs_.size());
  std::map<std::string, double> scores;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
    for (const auto& p : it->second) {
      const Document& d = docs_[p.doc];
      if (excluded.count(d.id)) continue;
      const double tf = static_cast<double>(p.tf);
      const double dl = static_cast<double>(doc_len_[p.doc]);
      const double denom =
          tf + kBm25K1 * (1.0 - kBm25B + kBm25B * dl / avg_len_);
      scores[d.id] += idf * tf * (kBm25K1 + 1.0) / denom;
    }
  }
  std::vector<EvidenceHit> hits;
  for (const auto& [id, s] : scores)
    if (s > 0.0) hits.push_back(EvidenceHit{id, s, 0, Channel::Sparse});
  std::stable_sort(hits.begin(), hits.end(),
                   [](const EvidenceHit& a, const EvidenceHit& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.doc_id < b.doc_id;
                   });
  if (hits.size() > static_cast<std::size_t>(k)) hits.resize(k);
  assign_ranks(hits);
  return hits;
}

std::vector<EvidenceHit> SearchIndex::dense_query(
    const std::string& q, int k, const std::set<std::string>& excluded) const {
  if (k < 1) raise(Err::InvalidArgument, "k must be >= 1");
  if (!embedder_) raise(Err::EmbedderFailure, "no embedder configured");
  std::vector<double> qv;
  try {
    qv = embedder_->embed(q);
  } catch (const std::exception& e) {
    raise(Err::EmbedderFailure, std::string("embedding query: ") + e.what());
  }
  std::vector<EvidenceHit> hits;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    if (excluded.count(docs_[d].id)) continue;
    const double sim = cosine(qv, vectors_[d]);
    if (sim > 0.0)
      hits.push_back(EvidenceHit{docs_[d].id, sim, 0, Channel::Dense});
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const EvidenceHit& a, const EvidenceHit& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.doc_id < b.doc_id;
                   });
  if (hits.size() > static_cast<std::size_t>(k)) hits.resize(k);
  assign_ranks(hits);
  return hits;
}

std::vector<EvidenceHit> SearchIndex::retrieve(
    const std::string& q, int m, int k_rrf, int k_cand,
    const std::set<std::string>& excluded) const {
  if (m < 1) raise(Err::InvalidArgument, "m must be >= 1");
  auto fused = rrf_fuse(
      {sparse_query(q, k_cand, excluded), dense_query(q, k_cand, excluded)},
      k_rrf);
  if (fused.size() > static_cast<std::size_t>(m)) fused.resize(m);
  assign_ranks(fused);
  return fused;
}

}  // namespace reagent
