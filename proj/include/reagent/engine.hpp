#pragma once

#include <memory>

#include "reagent/agents.hpp"
#include "reagent/bus.hpp"
#include "reagent/retrieval.hpp"
#include "reagent/scenario.hpp"

namespace reagent {

struct EngineConfig {
  int max_subquestions = 3;
  int local_bt_depth = 3;  // counted in checkpoints; 0 disables local rollback
  int max_global_rollbacks = 2;
  int max_rounds = 12;
  int top_m = 5;
  int k_cand = 20;
  int workers = 4;
  std::uint64_t seed = 0;
  std::string backend = "scripted";  // "scripted" | "http"
  std::map<std::string, double> temperatures;
  std::string http_base_url;
  std::string http_model = "gpt-4o";

  double temperature_for(AgentRole role) const;
  void validate() const;  // ConfigError on out-of-range values

  static EngineConfig defaults();
  static EngineConfig from_json(const json& j);
  static EngineConfig load_file(const std::string& path);
  /// Applies a partial override object (scenario or CLI supplied).
  void apply_patch(const json& patch);
  json to_json() const;
};

struct RunCounters {
  int local_backtracks = 0;
  int global_rollbacks = 0;
  int challenges = 0;
  int overrides = 0;
  int backend_calls = 0;

  json to_json() const;
};

struct SubQuestionTrace {
  std::string text;
  std::string status = "pending";  // pending | resolved | failed
  std::string partial_answer;
  std::vector<std::string> fact_ids;       // all facts ever admitted for it
  std::vector<std::string> last_batch;     // most recent admission
  int requeries = 0;
  VerifierOutput last_verifier;
};

struct HypothesisTrace {
  std::string name;
  bool consistent = false;
  bool rolled_back = false;
};

struct RunTrace {
  std::string question;
  std::string outcome;  // "answered" | "disclaimed"
  std::string answer;
  int rounds = 0;
  RunCounters counters;
  std::vector<SubQuestionTrace> sub_questions;
  std::vector<std::string> temporal_warnings;
  std::vector<std::string> temporal_violations;
  bool ambiguous = false;  // puzzle: more than one surviving hypothesis
  std::vector<HypothesisTrace> hypotheses;
  json assembler_record = json::object();
  bool answer_supported = false;

  json to_json(const Journal& journal) const;
};

struct RunResult {
  std::string answer;
  RunTrace trace;
};

inline constexpr const char* kDisclaimed = "DISCLAIMED";

/// Orchestrates one question: decomposition fan-out, per-sub-question
/// retrieval and verification with local backtracking, escalation to
/// supervisor/controller with global rollback, and final assembly or
/// disclaimer. One run per engine instance.
class Engine {
 public:
  /// Scripted runs pass a scenario; corpus runs pass an index. Exactly one
  /// retrieval source is required. Scenario predicates are merged into `reg`.
  Engine(EngineConfig cfg, Backend& backend, const Scenario* scenario,
         const SearchIndex* index, PredicateRegistry reg = PredicateRegistry{});

  RunResult run_question(const std::string& question);
  /// Hypothesis elimination over a puzzle scenario: contradictory hypotheses
  /// are rolled back; the first surviving one is the answer.
  RunResult run_puzzle();

  const Store& store() const { return store_; }
  const EngineConfig& config() const { return cfg_; }
  const PredicateRegistry& predicates() const { return reg_; }
  /// Partial trace kept intact when a run throws.
  const RunTrace& trace() const { return trace_; }

 private:
  struct WorkItem {
    std::size_t index = 0;
    RetrieverOutput evidence;
    std::vector<std::string> fact_lines;
    std::vector<std::string> unparsable;
    int backend_attempts_retriever = 0;
    int backend_attempts_verifier = 0;
    bool retrieval_failed = false;
  };

  RunCounters counters_from_journal() const;
  void journal_backend_call(AgentRole role, const std::string& key,
                            int attempts);
  std::string scripted_key(AgentRole role, const std::string& base_key,
                           int requery) const;
  WorkItem process_subquestion(std::size_t i);
  void commit_work(const WorkItem& item);
  void admit_composite(const CompositeEvent& ev);
  /// Supervisor/controller path; returns false when the run must disclaim.
  bool resolve_global_conflicts();
  void repend_starved_subquestions();
  AssemblerOutput assemble_now();
  void finish_trace(const std::string& outcome, const std::string& answer);

  EngineConfig cfg_;
  Backend& backend_;
  const Scenario* scenario_ = nullptr;
  const SearchIndex* index_ = nullptr;
  ScriptedBackend* scripted_ = nullptr;  // backend_ when scripted

  PredicateRegistry reg_;
  Store store_;
  std::unique_ptr<MessageBus> bus_;
  RunTrace trace_;

  std::vector<std::string> sub_questions_;
  std::map<std::string, std::size_t> subq_index_;
  std::map<std::string, std::string> fact_subq_;  // assertion id -> sub-question
  std::map<std::string, std::string> fact_doc_;   // assertion id -> document
  std::map<std::string, std::set<std::string>> excluded_docs_;
  std::map<std::string, int> psi_seen_;  // conflict-set content -> count
  int rollbacks_done_ = 0;
  bool ran_ = false;
};

}  // namespace reagent
