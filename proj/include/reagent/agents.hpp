#pragma once

#include <optional>

#include "reagent/backend.hpp"
#include "reagent/journal.hpp"

namespace reagent {

// ---- Typed agent outputs (wire schemas). Parsers raise SchemaViolation. ----

struct DecomposerOutput {
  std::vector<std::string> sub_questions;
  std::string decomposition_reasoning;

  static DecomposerOutput from_json(const json& j);
  json to_json() const;
};

struct EvidenceItem {
  std::string source;
  std::string content;
  std::optional<double> confidence;  // [0,1] when present
};

struct RetrieverOutput {
  std::vector<EvidenceItem> retrieved_evidence;
  std::string retrieval_reasoning;

  static RetrieverOutput from_json(const json& j);
  json to_json() const;
};

struct VerifierOutput {
  std::vector<std::string> verified_facts;
  std::vector<std::string> conflicts_detected;
  std::string local_backtracking_action = "none";

  static VerifierOutput from_json(const json& j);
  json to_json() const;
};

struct AssemblerOutput {
  std::string final_answer;
  std::vector<std::string> partial_answer_synthesis;
  std::string escalation_signal = "none";

  static AssemblerOutput from_json(const json& j);
  json to_json() const;
};

struct SupervisorOutput {
  std::vector<std::string> conflict_summary;
  std::string global_backtracking_decision = "none";
  std::vector<std::string> updated_consensus_state;
  std::string reasoning_notes;

  static SupervisorOutput from_json(const json& j);
  json to_json() const;
};

struct ControllerOutput {
  enum class Intervention { Challenge, Override, Escalate, None };
  Intervention intervention_type = Intervention::None;
  std::string target_of_intervention;
  std::string rationale;
  std::string meta_notes;

  static ControllerOutput from_json(const json& j);
  json to_json() const;
};

const char* intervention_name(ControllerOutput::Intervention i);

// ---- Retraction policy ----

/// Total order for choosing which conflicting assertion to drop: lowest
/// confidence first, ties broken by latest born_at, then highest id.
bool retract_before(const Assertion& a, const Assertion& b);

/// The member of `members` (looked up in `base`) first in retraction order,
/// skipping protected assertions unless include_protected is set. Returns
/// empty when every member is protected (and not included).
std::string pick_victim(const KnowledgeBase& base,
                        const std::vector<std::string>& members,
                        bool include_protected = false);

// ---- Agent logic ----

struct DecomposeParams {
  int m_max = 3;
  double temperature = 0.8;
};

/// Calls the backend, validates the schema, truncates to m_max.
/// Raises EmptyDecomposition when the question or reply is empty.
struct DecomposeCall {
  DecomposerOutput output;
  int backend_calls = 0;
};
DecomposeCall decompose(Backend& backend, const std::string& question,
                        const DecomposeParams& params);

/// Deterministic verification core: admits `new_evidence` into the agent's
/// knowledge set; on internal contradiction backtracks to the latest
/// checkpoint preceding every victim's birth and re-admits the survivors.
/// When any conflict cannot be resolved locally (protected pair, or the
/// needed checkpoint is deeper than depth_limit), no rollback is performed
/// and the conflicts are reported for escalation.
VerifierOutput verify_admit(Store& store, const PredicateRegistry& reg,
                            const std::string& agent,
                            std::vector<Assertion> new_evidence,
                            int depth_limit);

/// Assembly gate: returns the escalation signal when the combined knowledge
/// sets are inconsistent (nullopt when a final answer may be committed).
std::optional<std::string> assembly_escalation(const KnowledgeBase& base,
                                               const PredicateRegistry& reg,
                                               std::int64_t now);

struct SupervisorResolution {
  SupervisorOutput output;
  ConflictReport psi;                // the minimal conflict set
  std::vector<std::string> victims;  // retraction choices within psi
  std::string checkpoint_id;
  bool rolled_back = false;
};

/// Computes the minimal conflict set over the global live set, picks the
/// retraction victims, rolls every agent back to the latest GLOBAL checkpoint
/// preceding the earliest victim's birth. Raises NoConflict when the global
/// set is consistent and NoCheckpointAvailable when no usable victim or
/// checkpoint exists (controller takes over).
SupervisorResolution supervise(Store& store, const PredicateRegistry& reg);

struct ControllerDecision {
  ControllerOutput output;
  std::string retracted_id;  // empty when no retraction happened
};

/// Challenge/override path for recurring or otherwise unresolvable conflicts:
/// the victim of `psi` is retracted directly (override when protected), with
/// a challenge/override journal record. `recurrences` feeds the rationale.
ControllerDecision control(Store& store, const PredicateRegistry& reg,
                           const ConflictReport& psi, int recurrences);

}  // namespace reagent
