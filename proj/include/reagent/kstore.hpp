#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "reagent/assertion.hpp"

namespace reagent {

inline constexpr const char* kGlobalScope = "GLOBAL";

/// An agent-local (or global) view of live assertions at a logical time.
struct KnowledgeSet {
  std::string owner;
  std::set<std::string> live;
  std::int64_t as_of = 0;
};

enum class ConflictKind { PolarityClash, FunctionalClash };

inline const char* conflict_kind_name(ConflictKind k) {
  return k == ConflictKind::PolarityClash ? "polarity-clash"
                                          : "functional-clash";
}

struct ConflictReport {
  ConflictKind kind = ConflictKind::PolarityClash;
  std::vector<std::string> members;  // assertion ids, ascending
  std::int64_t detected_at = 0;

  json to_json() const;
};

/// True iff the two assertions cannot both hold: same triple with opposite
/// polarity, or a functional predicate bound to two different objects for the
/// same subject (both positive).
bool contradicts(const Assertion& a, const Assertion& b,
                 const PredicateRegistry& reg);

bool is_consistent(std::span<const Assertion> assertions,
                   const PredicateRegistry& reg);

/// One report per contradicting pair, ordered by (min id, max id).
std::vector<ConflictReport> find_conflicts(std::span<const Assertion> assertions,
                                           const PredicateRegistry& reg,
                                           std::int64_t detected_at = 0);

/// Deletion-based extraction of a subset-minimal inconsistent set: elements
/// are dropped in ascending-id order whenever the remainder stays
/// inconsistent. Throws NoConflict when the input is consistent.
ConflictReport minimal_conflict_set(std::vector<Assertion> assertions,
                                    const PredicateRegistry& reg,
                                    std::int64_t detected_at = 0);

/// Literal entailment: some assertion matches the query on canonical
/// subject, predicate, object, and polarity.
bool entails(std::span<const Assertion> assertions, const Assertion& query);

/// Owns every assertion introduced during a run plus the per-owner live sets.
/// Mutations here are raw; journaled mutation goes through journal::Store.
class KnowledgeBase {
 public:
  bool knows(const std::string& id) const;
  const Assertion* find(const std::string& id) const;

  /// Registers an assertion body. Re-registering the identical body is a
  /// no-op; a different body under the same id raises DuplicateId.
  void put(const Assertion& a);

  bool is_live(const std::string& owner, const std::string& id) const;
  void mark_live(const std::string& owner, const std::string& id,
                 std::int64_t at);
  void mark_dead(const std::string& owner, const std::string& id,
                 std::int64_t at);

  const KnowledgeSet* set_of(const std::string& owner) const;
  KnowledgeSet& ensure_set(const std::string& owner);

  /// Union of all agent live sets, stamped with the supplied time.
  KnowledgeSet global_view(std::int64_t as_of) const;

  /// Live assertions of one owner, ascending by id.
  std::vector<Assertion> live_of(const std::string& owner) const;
  /// Live assertions across all owners (union), ascending by id.
  std::vector<Assertion> global_live() const;

  std::vector<std::string> owners() const;
  /// owner -> live ids for every owner (checkpoint snapshot form).
  std::map<std::string, std::set<std::string>> snapshot() const;

  std::size_t assertion_count() const { return assertions_.size(); }

 private:
  std::map<std::string, Assertion> assertions_;
  std::map<std::string, KnowledgeSet> sets_;
};

}  // namespace reagent
