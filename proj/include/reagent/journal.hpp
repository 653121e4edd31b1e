#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "reagent/kstore.hpp"

namespace reagent {

enum class EntryKind {
  Assert,
  Retract,
  Message,
  Checkpoint,
  Rollback,
  Challenge,
  Override,
  FinalAnswer,
};

const char* entry_kind_name(EntryKind k);
EntryKind entry_kind_from(std::string_view s);

struct JournalEntry {
  std::int64_t seq = 0;
  std::int64_t time = 0;
  EntryKind kind = EntryKind::Assert;
  std::string actor;
  json payload;

  json to_json() const;
  static JournalEntry from_json(const json& j);
};

/// Append-only event log. Entries are never mutated or deleted; rollbacks
/// append retract entries rather than erasing history.
class Journal {
 public:
  std::int64_t append(std::int64_t time, EntryKind kind,
                      const std::string& actor, json payload);

  const std::vector<JournalEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t last_time() const { return last_time_; }

  std::size_t count(EntryKind kind) const;

  /// Newline-delimited JSON, one entry per line.
  void save(std::ostream& out) const;
  std::string to_ndjson() const;
  /// Raises CorruptLog with a line number on malformed input.
  static std::vector<JournalEntry> load(std::istream& in);
  static std::vector<JournalEntry> load_file(const std::string& path);

 private:
  std::vector<JournalEntry> entries_;
  std::int64_t last_time_ = 0;
};

/// Restorable state marker: explicit live-id snapshots per agent.
struct Checkpoint {
  std::string id;
  std::string scope;  // agent id or GLOBAL
  std::int64_t time = 0;
  std::map<std::string, std::set<std::string>> live_snapshot;
  std::int64_t seq = -1;  // journal seq of the checkpoint entry

  json to_json() const;
  static Checkpoint from_json(const json& j);
};

struct TemporalConstraint {
  enum class Kind { Always, Eventually };
  Kind kind = Kind::Always;
  Assertion proposition;  // pattern: id/source ignored
  std::int64_t created_at = 0;
  bool satisfied = false;  // eventually only

  std::string describe() const;
};

struct TemporalViolation {
  std::int64_t at = 0;
  std::string description;
};

/// Final state reconstructed from a log.
struct ReplayState {
  KnowledgeBase base;
  std::int64_t final_time = 0;
  std::optional<std::string> final_answer;
  std::vector<Checkpoint> checkpoints;
};

/// Deterministic reconstruction of per-agent live sets from a log.
/// Raises CorruptLog on malformed sequences.
ReplayState replay(const std::vector<JournalEntry>& log);

/// The single serialization point: a knowledge base whose every mutation is
/// journaled, plus checkpoints and temporal constraints.
class Store {
 public:
  Store() = default;

  std::int64_t now() const { return now_; }
  std::int64_t tick() { return ++now_; }

  const Journal& journal() const { return journal_; }
  const KnowledgeBase& base() const { return base_; }

  /// Fresh deterministic ids for assertions created by the engine.
  std::string mint_assertion_id();

  /// Inserts `a` into `owner`'s live set at a new tick and journals it.
  /// New ids get born_at stamped with that tick; a known id may be
  /// re-admitted only with its original body. DuplicateId if already live.
  KnowledgeSet assert_statement(const std::string& owner, Assertion a);

  /// Removes `id` from `owner`'s live set. kind selects the journal record:
  /// Retract refuses protected assertions, Override removes them anyway.
  void retract_statement(const std::string& owner, const std::string& id,
                         const std::string& actor,
                         EntryKind kind = EntryKind::Retract);

  Checkpoint take_checkpoint(const std::string& scope);
  const std::vector<Checkpoint>& checkpoints() const { return checkpoints_; }
  const Checkpoint* find_checkpoint(const std::string& id) const;
  /// Latest checkpoint for `scope` whose time is strictly before `before`.
  const Checkpoint* latest_checkpoint_before(const std::string& scope,
                                             std::int64_t before) const;
  const Checkpoint* latest_checkpoint(const std::string& scope) const;

  /// Reverts one agent to checkpoint r: live set becomes r's snapshot plus
  /// protected assertions born after r that are still live. depth_limit is
  /// counted in checkpoints (1 = most recent); 0 disables local backtracking.
  KnowledgeSet backtrack_local(const std::string& agent, const Checkpoint& r,
                               int depth_limit);

  /// Reverts all agents to a GLOBAL checkpoint, discarding every
  /// non-protected statement introduced after it.
  void backtrack_global(const Checkpoint& r,
                        const std::string& actor = "supervisor");

  void register_temporal(TemporalConstraint c);
  /// Checks all constraints against the current global live set; `always`
  /// violations are recorded and returned, `eventually` hits are latched.
  std::vector<TemporalViolation> check_temporal();
  const std::vector<TemporalViolation>& temporal_violations() const {
    return violations_;
  }
  std::vector<TemporalConstraint> unmet_eventualities() const;
  const std::vector<TemporalConstraint>& temporal_constraints() const {
    return temporal_;
  }

  /// Journals a non-state event (message, challenge, final-answer) at the
  /// current time.
  std::int64_t append_event(EntryKind kind, const std::string& actor,
                            json payload);

 private:
  void apply_restore(const Checkpoint& r, const std::string& scope,
                     const std::string& actor);

  Journal journal_;
  KnowledgeBase base_;
  std::vector<Checkpoint> checkpoints_;
  std::vector<TemporalConstraint> temporal_;
  std::vector<TemporalViolation> violations_;
  std::int64_t now_ = 0;
  std::int64_t next_assertion_ = 0;
  std::int64_t next_checkpoint_ = 0;
};

}  // namespace reagent
