// Independent brute-force oracles for property tests. These deliberately
// re-implement the checked rules from scratch (own canonicalization, own
// scoring) so that they share no code path with the library.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "reagent/assertion.hpp"
#include "reagent/retrieval.hpp"

namespace oracles {

// ---- conflict rules ----

inline std::string o_fold(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i)
    out.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(s[i]))));
  return out;
}

struct OraclePredicates {
  std::set<std::string> functional;  // folded names
  bool is_functional(const std::string& p) const {
    return functional.count(o_fold(p)) > 0;
  }
};

inline bool o_contradicts(const reagent::Assertion& a,
                          const reagent::Assertion& b,
                          const OraclePredicates& preds) {
  if (a.id == b.id) return false;
  if (o_fold(a.subject) != o_fold(b.subject)) return false;
  if (o_fold(a.predicate) != o_fold(b.predicate)) return false;
  if (o_fold(a.object) == o_fold(b.object)) return a.polarity != b.polarity;
  return preds.is_functional(a.predicate) &&
         a.polarity == reagent::Polarity::Positive &&
         b.polarity == reagent::Polarity::Positive;
}

inline bool o_consistent(const std::vector<reagent::Assertion>& s,
                         const OraclePredicates& preds) {
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (o_contradicts(s[i], s[j], preds)) return false;
  return true;
}

inline std::vector<std::pair<std::string, std::string>> o_conflict_pairs(
    const std::vector<reagent::Assertion>& s, const OraclePredicates& preds) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (o_contradicts(s[i], s[j], preds))
        pairs.push_back({std::min(s[i].id, s[j].id),
                         std::max(s[i].id, s[j].id)});
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

/// Exhaustive subset-minimality check: the member set is inconsistent and
/// every proper subset is consistent.
inline bool o_subset_minimal(const std::vector<reagent::Assertion>& pool,
                             const std::vector<std::string>& members,
                             const OraclePredicates& preds) {
  std::vector<reagent::Assertion> core;
  for (const auto& id : members)
    for (const auto& a : pool)
      if (a.id == id) core.push_back(a);
  if (core.size() != members.size()) return false;
  if (o_consistent(core, preds)) return false;
  const std::size_t n = core.size();
  for (std::uint64_t mask = 0; mask + 1 < (1ull << n); ++mask) {
    std::vector<reagent::Assertion> subset;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ull << i)) subset.push_back(core[i]);
    if (!o_consistent(subset, preds)) return false;
  }
  return true;
}

// ---- random assertion pools ----

struct AssertionGen {
  std::mt19937_64 rng;
  OraclePredicates preds;

  explicit AssertionGen(std::uint64_t seed) : rng(seed) {
    preds.functional = {"capital", "population", "culprit"};
  }

  /// size <= max_size assertions over a small vocabulary, with at least one
  /// injected contradicting pair when `inject_clash` is set.
  std::vector<reagent::Assertion> pool(std::size_t max_size,
                                       bool inject_clash) {
    static const std::vector<std::string> subjects = {"alpha", "beta", "gamma",
                                                      "delta"};
    static const std::vector<std::string> functional_preds = {"capital",
                                                              "population"};
    static const std::vector<std::string> plain_preds = {"borders",
                                                         "known_for"};
    static const std::vector<std::string> objects = {"x1", "x2", "x3", "x4",
                                                     "x5"};
    const std::size_t n =
        2 + static_cast<std::size_t>(rng() % (max_size - 1));
    std::vector<reagent::Assertion> out;
    for (std::size_t i = 0; i < n; ++i) {
      reagent::Assertion a;
      char buf[32];
      std::snprintf(buf, sizeof buf, "a%03zu", i);
      a.id = buf;
      a.subject = subjects[rng() % subjects.size()];
      const bool functional = rng() % 2 == 0;
      a.predicate = functional
                        ? functional_preds[rng() % functional_preds.size()]
                        : plain_preds[rng() % plain_preds.size()];
      a.object = objects[rng() % objects.size()];
      a.polarity = rng() % 4 == 0 ? reagent::Polarity::Negative
                                  : reagent::Polarity::Positive;
      a.confidence = static_cast<double>(rng() % 100) / 100.0;
      a.born_at = static_cast<std::int64_t>(i) + 1;
      out.push_back(std::move(a));
    }
    if (inject_clash && out.size() >= 2) {
      // Force a functional clash between the first two slots.
      out[0].predicate = "capital";
      out[0].polarity = reagent::Polarity::Positive;
      out[1] = out[0];
      out[1].id = "a001";
      out[1].object = out[0].object + "_alt";
      out[1].born_at = 2;
    }
    return out;
  }
};

// ---- retrieval oracles ----

inline std::vector<std::string> o_tokenize(const std::string& text) {
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      if (cur.size() >= 2) toks.push_back(cur);
      cur.clear();
    }
  }
  if (cur.size() >= 2) toks.push_back(cur);
  return toks;
}

/// Straight-line BM25 over the whole corpus (k1=1.2, b=0.75), summing over
/// sorted unique query terms like the implementation does so tie-free
/// orderings must match bit for bit.
inline std::vector<std::pair<std::string, double>> o_bm25(
    const std::vector<reagent::Document>& corpus, const std::string& query) {
  std::vector<std::vector<std::string>> bodies;
  for (const auto& d : corpus) bodies.push_back(o_tokenize(d.title + " " + d.text));
  double avg = 0.0;
  for (const auto& b : bodies) avg += static_cast<double>(b.size());
  avg /= static_cast<double>(corpus.size());

  const auto qtoks = o_tokenize(query);
  std::set<std::string> terms(qtoks.begin(), qtoks.end());
  std::map<std::string, double> scores;
  for (const auto& term : terms) {
    double df = 0.0;
    for (const auto& b : bodies)
      if (std::count(b.begin(), b.end(), term) > 0) df += 1.0;
    if (df == 0.0) continue;
    const double idf =
        std::log((static_cast<double>(corpus.size()) - df + 0.5) / (df + 0.5) +
                 1.0);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const double tf =
          static_cast<double>(std::count(bodies[d].begin(), bodies[d].end(),
                                         term));
      if (tf == 0.0) continue;
      const double dl = static_cast<double>(bodies[d].size());
      scores[corpus[d].id] +=
          idf * tf * (1.2 + 1.0) / (tf + 1.2 * (1.0 - 0.75 + 0.75 * dl / avg));
    }
  }
  std::vector<std::pair<std::string, double>> ranked(scores.begin(),
                                                     scores.end());
  std::erase_if(ranked, [](const auto& p) { return p.second <= 0.0; });
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a,
                                                    const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

/// Brute-force cosine ranking under the hashed-bag embedder.
inline std::vector<std::pair<std::string, double>> o_cosine_rank(
    const std::vector<reagent::Document>& corpus, const std::string& query,
    const reagent::Embedder& embedder) {
  const auto qv = embedder.embed(query);
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& d : corpus) {
    const auto dv = embedder.embed(d.title + " " + d.text);
    double dot = 0.0, nq = 0.0, nd = 0.0;
    for (std::size_t i = 0; i < qv.size(); ++i) {
      dot += qv[i] * dv[i];
      nq += qv[i] * qv[i];
      nd += dv[i] * dv[i];
    }
    const double sim =
        (nq == 0.0 || nd == 0.0) ? 0.0 : dot / (std::sqrt(nq) * std::sqrt(nd));
    if (sim > 0.0) ranked.push_back({d.id, sim});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a,
                                                    const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

/// Direct RRF formula over pre-ranked doc-id lists.
inline std::vector<std::pair<std::string, double>> o_rrf(
    const std::vector<std::vector<std::string>>& lists, int k) {
  std::map<std::string, double> scores;
  for (const auto& list : lists)
    for (std::size_t r = 0; r < list.size(); ++r)
      scores[list[r]] += 1.0 / (k + static_cast<int>(r) + 1);
  std::vector<std::pair<std::string, double>> ranked(scores.begin(),
                                                     scores.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a,
                                                    const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

}  // namespace oracles
