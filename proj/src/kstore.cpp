#include "reagent/kstore.hpp"

#include <algorithm>

namespace reagent {

json ConflictReport::to_json() const {
  return json{{"kind", conflict_kind_name(kind)},
              {"members", members},
              {"detected_at", detected_at}};
}

bool contradicts(const Assertion& a, const Assertion& b,
                 const PredicateRegistry& reg) {
  if (&a == &b || a.id == b.id) return false;
  if (canonical(a.subject) != canonical(b.subject)) return false;
  if (canonical(a.predicate) != canonical(b.predicate)) return false;
  const bool same_object = canonical(a.object) == canonical(b.object);
  if (same_object) return a.polarity != b.polarity;
  // Different objects clash only under a functional predicate, and only for
  // two positive bindings (a negative statement denies one binding, it does
  // not assert another).
  return reg.is_functional(a.predicate) &&
         a.polarity == Polarity::Positive && b.polarity == Polarity::Positive;
}

bool is_consistent(std::span<const Assertion> assertions,
                   const PredicateRegistry& reg) {
  for (std::size_t i = 0; i < assertions.size(); ++i)
    for (std::size_t j = i + 1; j < assertions.size(); ++j)
      if (contradicts(assertions[i], assertions[j], reg)) return false;
  return true;
}

std::vector<ConflictReport> find_conflicts(
    std::span<const Assertion> assertions, const PredicateRegistry& reg,
    std::int64_t detected_at) {
  std::vector<ConflictReport> reports;
  for (std::size_t i = 0; i < assertions.size(); ++i) {
    for (std::size_t j = i + 1; j < assertions.size(); ++j) {
      const Assertion& a = assertions[i];
      const Assertion& b = assertions[j];
      if (!contradicts(a, b, reg)) continue;
      ConflictReport r;
      r.kind = a.same_triple(b) ? ConflictKind::PolarityClash
                                : ConflictKind::FunctionalClash;
      r.members = {std::min(a.id, b.id), std::max(a.id, b.id)};
      r.detected_at = detected_at;
      reports.push_back(std::move(r));
    }
  }
  std::sort(reports.begin(), reports.end(),
            [](const ConflictReport& x, const ConflictReport& y) {
              return x.members < y.members;
            });
  return reports;
}

ConflictReport minimal_conflict_set(std::vector<Assertion> assertions,
                                    const PredicateRegistry& reg,
                                    std::int64_t detected_at) {
  std::sort(assertions.begin(), assertions.end(),
            [](const Assertion& a, const Assertion& b) { return a.id < b.id; });
  if (is_consistent(assertions, reg))
    raise(Err::NoConflict, "input set is consistent");

  // Deletion pass: drop each element (ascending id) whose removal keeps the
  // remainder inconsistent.
  std::vector<Assertion> core = assertions;
  std::size_t i = 0;
  while (i < core.size()) {
    std::vector<Assertion> without;
    without.reserve(core.size() - 1);
    for (std::size_t k = 0; k < core.size(); ++k)
      if (k != i) without.push_back(core[k]);
    if (!is_consistent(without, reg)) {
      core = std::move(without);
    } else {
      ++i;
    }
  }

  ConflictReport r;
  r.detected_at = detected_at;
  r.kind = ConflictKind::FunctionalClash;
  for (const auto& a : core) r.members.push_back(a.id);
  // Minimal cores from this fragment are contradicting pairs; report the
  // pair's kind.
  for (std::size_t x = 0; x < core.size(); ++x)
    for (std::size_t y = x + 1; y < core.size(); ++y)
      if (contradicts(core[x], core[y], reg)) {
        r.kind = core[x].same_triple(core[y]) ? ConflictKind::PolarityClash
                                              : ConflictKind::FunctionalClash;
      }
  return r;
}

bool entails(std::span<const Assertion> assertions, const Assertion& query) {
  for (const auto& a : assertions)
    if (a.same_literal(query)) return true;
  return false;
}

bool KnowledgeBase::knows(const std::string& id) const {
  return assertions_.count(id) > 0;
}

const Assertion* KnowledgeBase::find(const std::string& id) const {
  auto it = assertions_.find(id);
  return it == assertions_.end() ? nullptr : &it->second;
}

void KnowledgeBase::put(const Assertion& a) {
  if (a.id.empty()) raise(Err::InvalidArgument, "assertion without id");
  auto it = assertions_.find(a.id);
  if (it == assertions_.end()) {
    assertions_.emplace(a.id, a);
    return;
  }
  const Assertion& have = it->second;
  if (!have.same_literal(a) || have.confidence != a.confidence ||
      have.is_protected != a.is_protected || have.born_at != a.born_at)
    raise(Err::DuplicateId, "id '" + a.id + "' already bound to a different "
                            "assertion");
}

bool KnowledgeBase::is_live(const std::string& owner,
                            const std::string& id) const {
  const KnowledgeSet* ks = set_of(owner);
  return ks && ks->live.count(id) > 0;
}

void KnowledgeBase::mark_live(const std::string& owner, const std::string& id,
                              std::int64_t at) {
  if (!knows(id)) raise(Err::InvalidArgument, "unknown assertion '" + id + "'");
  KnowledgeSet& ks = ensure_set(owner);
  ks.live.insert(id);
  ks.as_of = at;
}

void KnowledgeBase::mark_dead(const std::string& owner, const std::string& id,
                              std::int64_t at) {
  KnowledgeSet& ks = ensure_set(owner);
  ks.live.erase(id);
  ks.as_of = at;
}

const KnowledgeSet* KnowledgeBase::set_of(const std::string& owner) const {
  auto it = sets_.find(owner);
  return it == sets_.end() ? nullptr : &it->second;
}

KnowledgeSet& KnowledgeBase::ensure_set(const std::string& owner) {
  auto it = sets_.find(owner);
  if (it == sets_.end()) {
    KnowledgeSet ks;
    ks.owner = owner;
    it = sets_.emplace(owner, std::move(ks)).first;
  }
  return it->second;
}

KnowledgeSet KnowledgeBase::global_view(std::int64_t as_of) const {
  KnowledgeSet g;
  g.owner = kGlobalScope;
  g.as_of = as_of;
  for (const auto& [owner, ks] : sets_)
    g.live.insert(ks.live.begin(), ks.live.end());
  return g;
}

std::vector<Assertion> KnowledgeBase::live_of(const std::string& owner) const {
  std::vector<Assertion> out;
  const KnowledgeSet* ks = set_of(owner);
  if (!ks) return out;
  out.reserve(ks->live.size());
  for (const auto& id : ks->live) out.push_back(*find(id));
  return out;
}

std::vector<Assertion> KnowledgeBase::global_live() const {
  std::set<std::string> ids;
  for (const auto& [owner, ks] : sets_)
    ids.insert(ks.live.begin(), ks.live.end());
  std::vector<Assertion> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(*find(id));
  return out;
}

std::vector<std::string> KnowledgeBase::owners() const {
  std::vector<std::string> out;
  out.reserve(sets_.size());
  for (const auto& [owner, _] : sets_) out.push_back(owner);
  return out;
}

std::map<std::string, std::set<std::string>> KnowledgeBase::snapshot() const {
  std::map<std::string, std::set<std::string>> snap;
  for (const auto& [owner, ks] : sets_) snap[owner] = ks.live;
  return snap;
}

}  // namespace reagent
