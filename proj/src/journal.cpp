#include "reagent/journal.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace reagent {

const char* entry_kind_name(EntryKind k) {
  switch (k) {
    case EntryKind::Assert: return "assert";
    case EntryKind::Retract: return "retract";
    case EntryKind::Message: return "message";
    case EntryKind::Checkpoint: return "checkpoint";
    case EntryKind::Rollback: return "rollback";
    case EntryKind::Challenge: return "challenge";
    case EntryKind::Override: return "override";
    case EntryKind::FinalAnswer: return "final-answer";
  }
  return "unknown";
}

EntryKind entry_kind_from(std::string_view s) {
  if (s == "assert") return EntryKind::Assert;
  if (s == "retract") return EntryKind::Retract;
  if (s == "message") return EntryKind::Message;
  if (s == "checkpoint") return EntryKind::Checkpoint;
  if (s == "rollback") return EntryKind::Rollback;
  if (s == "challenge") return EntryKind::Challenge;
  if (s == "override") return EntryKind::Override;
  if (s == "final-answer") return EntryKind::FinalAnswer;
  raise(Err::CorruptLog, "unknown entry kind '" + std::string(s) + "'");
}

json JournalEntry::to_json() const {
  return json{{"seq", seq},
              {"time", time},
              {"kind", entry_kind_name(kind)},
              {"actor", actor},
              {"payload", payload}};
}

JournalEntry JournalEntry::from_json(const json& j) {
  JournalEntry e;
  try {
    e.seq = j.at("seq").get<std::int64_t>();
    e.time = j.at("time").get<std::int64_t>();
    e.kind = entry_kind_from(j.at("kind").get<std::string>());
    e.actor = j.at("actor").get<std::string>();
    e.payload = j.at("payload");
  } catch (const json::exception& ex) {
    raise(Err::CorruptLog, std::string("bad journal entry: ") + ex.what());
  }
  return e;
}

std::int64_t Journal::append(std::int64_t time, EntryKind kind,
                             const std::string& actor, json payload) {
  if (!entries_.empty() && time < last_time_)
    raise(Err::TimeRegression,
          "entry time " + std::to_string(time) + " precedes journal time " +
              std::to_string(last_time_));
  JournalEntry e;
  e.seq = static_cast<std::int64_t>(entries_.size());
  e.time = time;
  e.kind = kind;
  e.actor = actor;
  e.payload = std::move(payload);
  last_time_ = time;
  entries_.push_back(std::move(e));
  return entries_.back().seq;
}

std::size_t Journal::count(EntryKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(),
                    [&](const JournalEntry& e) { return e.kind == kind; }));
}

void Journal::save(std::ostream& out) const {
  for (const auto& e : entries_) out << e.to_json().dump() << '\n';
}

std::string Journal::to_ndjson() const {
  std::ostringstream os;
  save(os);
  return os.str();
}

std::vector<JournalEntry> Journal::load(std::istream& in) {
  std::vector<JournalEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      raise(Err::CorruptLog,
            "line " + std::to_string(lineno) + ": " + ex.what());
    }
    JournalEntry e;
    try {
      e = JournalEntry::from_json(j);
    } catch (const Error& ex) {
      raise(Err::CorruptLog, "line " + std::to_string(lineno) + ": " +
                                 ex.what());
    }
    if (!entries.empty()) {
      if (e.seq != entries.back().seq + 1)
        raise(Err::CorruptLog, "line " + std::to_string(lineno) +
                                   ": seq not strictly increasing");
      if (e.time < entries.back().time)
        raise(Err::CorruptLog,
              "line " + std::to_string(lineno) + ": time regression");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<JournalEntry> Journal::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::CorruptLog, "cannot open log file " + path);
  return load(in);
}

json Checkpoint::to_json() const {
  json snap = json::object();
  for (const auto& [owner, ids] : live_snapshot) snap[owner] = ids;
  return json{{"id", id}, {"scope", scope}, {"time", time},
              {"live_snapshot", snap}};
}

Checkpoint Checkpoint::from_json(const json& j) {
  Checkpoint c;
  try {
    c.id = j.at("id").get<std::string>();
    c.scope = j.at("scope").get<std::string>();
    c.time = j.at("time").get<std::int64_t>();
    for (const auto& [owner, ids] : j.at("live_snapshot").items())
      c.live_snapshot[owner] = ids.get<std::set<std::string>>();
  } catch (const json::exception& ex) {
    raise(Err::CorruptLog, std::string("bad checkpoint: ") + ex.what());
  }
  return c;
}

std::string TemporalConstraint::describe() const {
  std::string prefix = kind == Kind::Always ? "always" : "eventually";
  return prefix + "(" + proposition.describe() + ")";
}

namespace {

// Shared by Store rollbacks and replay: live set becomes the checkpoint's
// snapshot plus protected assertions born after it that are live right now.
void restore_scope(KnowledgeBase& base, const Checkpoint& r,
                   const std::string& agent, std::int64_t at) {
  std::set<std::string> target;
  auto it = r.live_snapshot.find(agent);
  if (it != r.live_snapshot.end()) target = it->second;
  if (const KnowledgeSet* ks = base.set_of(agent)) {
    for (const auto& id : ks->live) {
      const Assertion* a = base.find(id);
      if (a && a->is_protected && a->born_at > r.time) target.insert(id);
    }
  }
  KnowledgeSet& ks = base.ensure_set(agent);
  ks.live = std::move(target);
  ks.as_of = at;
}

std::vector<std::string> scope_agents(const KnowledgeBase& base,
                                      const Checkpoint& r) {
  if (r.scope != kGlobalScope) return {r.scope};
  std::set<std::string> agents;
  for (const auto& o : base.owners()) agents.insert(o);
  for (const auto& [o, _] : r.live_snapshot) agents.insert(o);
  return {agents.begin(), agents.end()};
}

}  // namespace

ReplayState replay(const std::vector<JournalEntry>& log) {
  ReplayState st;
  std::int64_t prev_seq = -1;
  for (const auto& e : log) {
    if (e.seq != prev_seq + 1)
      raise(Err::CorruptLog, "seq " + std::to_string(e.seq) +
                                 " out of order at journal position " +
                                 std::to_string(prev_seq + 1));
    if (e.time < st.final_time)
      raise(Err::CorruptLog, "time regression at seq " + std::to_string(e.seq));
    prev_seq = e.seq;
    st.final_time = e.time;
    try {
      switch (e.kind) {
        case EntryKind::Assert: {
          const Assertion a = Assertion::from_json(e.payload.at("assertion"));
          const std::string owner = e.payload.at("owner").get<std::string>();
          st.base.put(a);
          st.base.mark_live(owner, a.id, e.time);
          break;
        }
        case EntryKind::Retract:
        case EntryKind::Override: {
          const std::string owner = e.payload.at("owner").get<std::string>();
          const std::string id = e.payload.at("id").get<std::string>();
          if (!st.base.knows(id))
            raise(Err::CorruptLog,
                  "retract of unknown assertion '" + id + "'");
          st.base.mark_dead(owner, id, e.time);
          break;
        }
        case EntryKind::Checkpoint: {
          Checkpoint c = Checkpoint::from_json(e.payload);
          c.seq = e.seq;
          st.checkpoints.push_back(std::move(c));
          break;
        }
        case EntryKind::Rollback: {
          const std::string cp_id =
              e.payload.at("checkpoint").get<std::string>();
          const Checkpoint* cp = nullptr;
          for (const auto& c : st.checkpoints)
            if (c.id == cp_id) cp = &c;
          if (!cp)
            raise(Err::CorruptLog,
                  "rollback references unknown checkpoint '" + cp_id + "'");
          for (const auto& agent : scope_agents(st.base, *cp))
            restore_scope(st.base, *cp, agent, e.time);
          break;
        }
        case EntryKind::FinalAnswer:
          st.final_answer = e.payload.at("answer").get<std::string>();
          break;
        case EntryKind::Message:
        case EntryKind::Challenge:
          break;  // informational
      }
    } catch (const json::exception& ex) {
      raise(Err::CorruptLog, "seq " + std::to_string(e.seq) + ": " +
                                 ex.what());
    } catch (const Error& ex) {
      if (ex.code() == Err::CorruptLog) throw;
      raise(Err::CorruptLog,
            "seq " + std::to_string(e.seq) + ": " + ex.what());
    }
  }
  return st;
}

std::string Store::mint_assertion_id() {
  char buf[16];
  std::snprintf(buf, sizeof buf, "a%04lld",
                static_cast<long long>(next_assertion_++));
  return buf;
}

KnowledgeSet Store::assert_statement(const std::string& owner, Assertion a) {
  if (a.id.empty()) a.id = mint_assertion_id();
  if (base_.is_live(owner, a.id))
    raise(Err::DuplicateId,
          "assertion '" + a.id + "' already live for " + owner);
  const std::int64_t t = tick();
  if (const Assertion* have = base_.find(a.id)) {
    // Re-admission must carry the original body; it keeps the original
    // logical birth time.
    if (!have->same_literal(a) || have->confidence != a.confidence ||
        have->is_protected != a.is_protected)
      raise(Err::DuplicateId,
            "id '" + a.id + "' already bound to a different assertion");
    a = *have;
  } else {
    a.born_at = t;
    base_.put(a);
  }
  journal_.append(t, EntryKind::Assert, owner,
                  json{{"owner", owner}, {"assertion", a.to_json()}});
  base_.mark_live(owner, a.id, t);
  return *base_.set_of(owner);
}

void Store::retract_statement(const std::string& owner, const std::string& id,
                              const std::string& actor, EntryKind kind) {
  if (kind != EntryKind::Retract && kind != EntryKind::Override)
    raise(Err::InvalidArgument, "retract kind must be retract or override");
  const Assertion* a = base_.find(id);
  if (!a || !base_.is_live(owner, id))
    raise(Err::InvalidArgument,
          "assertion '" + id + "' is not live for " + owner);
  if (a->is_protected && kind != EntryKind::Override)
    raise(Err::InvalidArgument,
          "assertion '" + id + "' is protected; override required");
  const std::int64_t t = tick();
  journal_.append(t, kind, actor, json{{"owner", owner}, {"id", id}});
  base_.mark_dead(owner, id, t);
}

Checkpoint Store::take_checkpoint(const std::string& scope) {
  Checkpoint c;
  char buf[16];
  std::snprintf(buf, sizeof buf, "cp%04lld",
                static_cast<long long>(next_checkpoint_++));
  c.id = buf;
  c.scope = scope;
  c.time = now_;
  if (scope == kGlobalScope) {
    c.live_snapshot = base_.snapshot();
  } else {
    const KnowledgeSet* ks = base_.set_of(scope);
    c.live_snapshot[scope] = ks ? ks->live : std::set<std::string>{};
  }
  c.seq = journal_.append(now_, EntryKind::Checkpoint, scope, c.to_json());
  checkpoints_.push_back(c);
  return c;
}

const Checkpoint* Store::find_checkpoint(const std::string& id) const {
  for (const auto& c : checkpoints_)
    if (c.id == id) return &c;
  return nullptr;
}

const Checkpoint* Store::latest_checkpoint_before(const std::string& scope,
                                                  std::int64_t before) const {
  const Checkpoint* best = nullptr;
  for (const auto& c : checkpoints_)
    if (c.scope == scope && c.time < before) best = &c;
  return best;
}

const Checkpoint* Store::latest_checkpoint(const std::string& scope) const {
  const Checkpoint* best = nullptr;
  for (const auto& c : checkpoints_)
    if (c.scope == scope) best = &c;
  return best;
}

void Store::apply_restore(const Checkpoint& r, const std::string& scope,
                          const std::string& actor) {
  const std::int64_t t = tick();
  // Journal one retract per discarded assertion, in canonical order, then the
  // rollback record itself. Replay applies the same two steps.
  for (const auto& agent : scope_agents(base_, r)) {
    const KnowledgeSet* ks = base_.set_of(agent);
    if (!ks) continue;
    std::set<std::string> target;
    auto it = r.live_snapshot.find(agent);
    if (it != r.live_snapshot.end()) target = it->second;
    std::vector<std::string> removed;
    for (const auto& id : ks->live) {
      const Assertion* a = base_.find(id);
      const bool survives_protected =
          a && a->is_protected && a->born_at > r.time;
      if (!target.count(id) && !survives_protected) removed.push_back(id);
    }
    for (const auto& id : removed) {
      journal_.append(t, EntryKind::Retract, actor,
                      json{{"owner", agent}, {"id", id}});
      base_.mark_dead(agent, id, t);
    }
  }
  journal_.append(t, EntryKind::Rollback, actor,
                  json{{"checkpoint", r.id}, {"scope", scope}});
  for (const auto& agent : scope_agents(base_, r))
    restore_scope(base_, r, agent, t);
}

KnowledgeSet Store::backtrack_local(const std::string& agent,
                                    const Checkpoint& r, int depth_limit) {
  if (r.scope != agent)
    raise(Err::ScopeMismatch, "checkpoint " + r.id + " has scope " + r.scope +
                                  ", not " + agent);
  if (!find_checkpoint(r.id))
    raise(Err::ScopeMismatch, "checkpoint " + r.id + " unknown to this store");
  int depth = 1;
  for (const auto& c : checkpoints_)
    if (c.scope == agent && c.seq > r.seq) ++depth;
  if (depth > depth_limit)
    raise(Err::DepthExceeded, "checkpoint " + r.id + " is depth " +
                                  std::to_string(depth) + ", limit " +
                                  std::to_string(depth_limit));
  apply_restore(r, agent, agent);
  return *base_.set_of(agent);
}

void Store::backtrack_global(const Checkpoint& r, const std::string& actor) {
  if (r.scope != kGlobalScope)
    raise(Err::ScopeMismatch,
          "checkpoint " + r.id + " has scope " + r.scope + ", not GLOBAL");
  if (!find_checkpoint(r.id))
    raise(Err::ScopeMismatch, "checkpoint " + r.id + " unknown to this store");
  apply_restore(r, kGlobalScope, actor);
}

void Store::register_temporal(TemporalConstraint c) {
  if (c.created_at == 0) c.created_at = now_;
  temporal_.push_back(std::move(c));
}

std::vector<TemporalViolation> Store::check_temporal() {
  std::vector<TemporalViolation> fresh;
  const std::vector<Assertion> live = base_.global_live();
  for (auto& c : temporal_) {
    const bool holds = entails(live, c.proposition);
    if (c.kind == TemporalConstraint::Kind::Always) {
      if (now_ >= c.created_at && !holds) {
        TemporalViolation v;
        v.at = now_;
        v.description = c.describe() + " does not hold at t=" +
                        std::to_string(now_);
        fresh.push_back(v);
        violations_.push_back(v);
      }
    } else if (!c.satisfied && holds) {
      c.satisfied = true;
    }
  }
  return fresh;
}

std::vector<TemporalConstraint> Store::unmet_eventualities() const {
  std::vector<TemporalConstraint> out;
  for (const auto& c : temporal_)
    if (c.kind == TemporalConstraint::Kind::Eventually && !c.satisfied)
      out.push_back(c);
  return out;
}

std::int64_t Store::append_event(EntryKind kind, const std::string& actor,
                                 json payload) {
  return journal_.append(now_, kind, actor, std::move(payload));
}

}  // namespace reagent
