#include "reagent/agents.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace reagent {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) raise(Err::SchemaViolation, what);
}

std::vector<std::string> string_list(const json& j, const char* field) {
  require(j.contains(field) && j[field].is_array(),
          std::string(field) + " must be an array");
  std::vector<std::string> out;
  for (const auto& item : j[field]) {
    require(item.is_string(), std::string(field) + " entries must be strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string string_field(const json& j, const char* field,
                         bool required = true) {
  if (!j.contains(field)) {
    require(!required, std::string("missing field ") + field);
    return {};
  }
  require(j[field].is_string(), std::string(field) + " must be a string");
  return j[field].get<std::string>();
}

std::string describe_conflict(const KnowledgeBase& base,
                              const ConflictReport& c) {
  std::ostringstream os;
  os << conflict_kind_name(c.kind) << ":";
  for (const auto& id : c.members) {
    const Assertion* a = base.find(id);
    os << " " << id;
    if (a) os << "(" << a->describe() << ")";
  }
  return os.str();
}

}  // namespace

DecomposerOutput DecomposerOutput::from_json(const json& j) {
  require(j.is_object(), "decomposer reply must be an object");
  DecomposerOutput out;
  out.sub_questions = string_list(j, "sub_questions");
  out.decomposition_reasoning =
      string_field(j, "decomposition_reasoning", false);
  return out;
}

json DecomposerOutput::to_json() const {
  return json{{"sub_questions", sub_questions},
              {"decomposition_reasoning", decomposition_reasoning}};
}

RetrieverOutput RetrieverOutput::from_json(const json& j) {
  require(j.is_object(), "retriever reply must be an object");
  require(j.contains("retrieved_evidence") && j["retrieved_evidence"].is_array(),
          "retrieved_evidence must be an array");
  RetrieverOutput out;
  for (const auto& e : j["retrieved_evidence"]) {
    require(e.is_object(), "evidence entries must be objects");
    EvidenceItem item;
    item.source = string_field(e, "source");
    item.content = string_field(e, "content");
    if (e.contains("confidence")) {
      require(e["confidence"].is_number(), "confidence must be a number");
      item.confidence = e["confidence"].get<double>();
      require(*item.confidence >= 0.0 && *item.confidence <= 1.0,
              "confidence out of [0,1]");
    }
    out.retrieved_evidence.push_back(std::move(item));
  }
  out.retrieval_reasoning = string_field(j, "retrieval_reasoning", false);
  return out;
}

json RetrieverOutput::to_json() const {
  json arr = json::array();
  for (const auto& e : retrieved_evidence) {
    json item{{"source", e.source}, {"content", e.content}};
    if (e.confidence) item["confidence"] = *e.confidence;
    arr.push_back(std::move(item));
  }
  return json{{"retrieved_evidence", arr},
              {"retrieval_reasoning", retrieval_reasoning}};
}

VerifierOutput VerifierOutput::from_json(const json& j) {
  require(j.is_object(), "verifier reply must be an object");
  VerifierOutput out;
  out.verified_facts = string_list(j, "verified_facts");
  if (j.contains("conflicts_detected"))
    out.conflicts_detected = string_list(j, "conflicts_detected");
  out.local_backtracking_action =
      string_field(j, "local_backtracking_action", false);
  if (out.local_backtracking_action.empty())
    out.local_backtracking_action = "none";
  return out;
}

json VerifierOutput::to_json() const {
  return json{{"verified_facts", verified_facts},
              {"conflicts_detected", conflicts_detected},
              {"local_backtracking_action", local_backtracking_action}};
}

AssemblerOutput AssemblerOutput::from_json(const json& j) {
  require(j.is_object(), "assembler reply must be an object");
  AssemblerOutput out;
  out.final_answer = string_field(j, "final_answer");
  if (j.contains("partial_answer_synthesis"))
    out.partial_answer_synthesis = string_list(j, "partial_answer_synthesis");
  out.escalation_signal = string_field(j, "escalation_signal", false);
  if (out.escalation_signal.empty()) out.escalation_signal = "none";
  return out;
}

json AssemblerOutput::to_json() const {
  return json{{"final_answer", final_answer},
              {"partial_answer_synthesis", partial_answer_synthesis},
              {"escalation_signal", escalation_signal}};
}

SupervisorOutput SupervisorOutput::from_json(const json& j) {
  require(j.is_object(), "supervisor reply must be an object");
  SupervisorOutput out;
  out.conflict_summary = string_list(j, "conflict_summary");
  out.global_backtracking_decision =
      string_field(j, "global_backtracking_decision", false);
  if (out.global_backtracking_decision.empty())
    out.global_backtracking_decision = "none";
  if (j.contains("updated_consensus_state"))
    out.updated_consensus_state = string_list(j, "updated_consensus_state");
  out.reasoning_notes = string_field(j, "reasoning_notes", false);
  return out;
}

json SupervisorOutput::to_json() const {
  return json{{"conflict_summary", conflict_summary},
              {"global_backtracking_decision", global_backtracking_decision},
              {"updated_consensus_state", updated_consensus_state},
              {"reasoning_notes", reasoning_notes}};
}

const char* intervention_name(ControllerOutput::Intervention i) {
  switch (i) {
    case ControllerOutput::Intervention::Challenge: return "challenge";
    case ControllerOutput::Intervention::Override: return "override";
    case ControllerOutput::Intervention::Escalate: return "escalate";
    case ControllerOutput::Intervention::None: return "none";
  }
  return "none";
}

ControllerOutput ControllerOutput::from_json(const json& j) {
  require(j.is_object(), "controller reply must be an object");
  ControllerOutput out;
  const std::string kind = string_field(j, "intervention_type");
  if (kind == "challenge")
    out.intervention_type = Intervention::Challenge;
  else if (kind == "override")
    out.intervention_type = Intervention::Override;
  else if (kind == "escalate")
    out.intervention_type = Intervention::Escalate;
  else if (kind == "none")
    out.intervention_type = Intervention::None;
  else
    raise(Err::SchemaViolation, "intervention_type must be challenge | "
                                "override | escalate | none");
  out.target_of_intervention = string_field(j, "target_of_intervention", false);
  out.rationale = string_field(j, "rationale", false);
  out.meta_notes = string_field(j, "meta_notes", false);
  return out;
}

json ControllerOutput::to_json() const {
  return json{{"intervention_type", intervention_name(intervention_type)},
              {"target_of_intervention", target_of_intervention},
              {"rationale", rationale},
              {"meta_notes", meta_notes}};
}

bool retract_before(const Assertion& a, const Assertion& b) {
  if (a.confidence != b.confidence) return a.confidence < b.confidence;
  if (a.born_at != b.born_at) return a.born_at > b.born_at;
  return a.id > b.id;
}

std::string pick_victim(const KnowledgeBase& base,
                        const std::vector<std::string>& members,
                        bool include_protected) {
  const Assertion* best = nullptr;
  for (const auto& id : members) {
    const Assertion* a = base.find(id);
    if (!a) continue;
    if (a->is_protected && !include_protected) continue;
    if (!best || retract_before(*a, *best)) best = a;
  }
  return best ? best->id : std::string{};
}

DecomposeCall decompose(Backend& backend, const std::string& question,
                        const DecomposeParams& params) {
  if (question.empty()) raise(Err::EmptyDecomposition, "empty question");
  const BackendResult res = invoke_backend(
      backend, AgentRole::Decomposer, question, question, params.temperature,
      [](const json& j) { DecomposerOutput::from_json(j); });
  DecomposeCall call;
  call.backend_calls = res.attempts;
  call.output = DecomposerOutput::from_json(res.value);
  if (call.output.sub_questions.empty())
    raise(Err::EmptyDecomposition,
          "decomposer produced no sub-questions for \"" + question + "\"");
  if (call.output.sub_questions.size() > static_cast<std::size_t>(params.m_max))
    call.output.sub_questions.resize(params.m_max);
  return call;
}

VerifierOutput verify_admit(Store& store, const PredicateRegistry& reg,
                            const std::string& agent,
                            std::vector<Assertion> new_evidence,
                            int depth_limit) {
  if (!store.latest_checkpoint(agent)) store.take_checkpoint(agent);

  for (auto& a : new_evidence) {
    if (a.id.empty()) a.id = store.mint_assertion_id();
    if (a.source.empty()) a.source = agent;
    store.assert_statement(agent, a);
  }

  VerifierOutput out;
  const KnowledgeBase& base = store.base();
  std::vector<Assertion> live = base.live_of(agent);
  std::vector<ConflictReport> conflicts = find_conflicts(live, reg, store.now());

  if (!conflicts.empty()) {
    // Plan one victim per uncovered conflicting pair.
    std::set<std::string> victims;
    bool resolvable = true;
    for (const auto& c : conflicts) {
      bool covered = false;
      for (const auto& m : c.members) covered |= victims.count(m) > 0;
      if (covered) continue;
      const std::string v = pick_victim(base, c.members);
      if (v.empty()) {
        resolvable = false;  // protected pair: this agent cannot fix it
        break;
      }
      victims.insert(v);
    }

    const Checkpoint* target = nullptr;
    if (resolvable) {
      std::int64_t min_born = std::numeric_limits<std::int64_t>::max();
      for (const auto& id : victims)
        min_born = std::min(min_born, base.find(id)->born_at);
      target = store.latest_checkpoint_before(agent, min_born);
      if (!target) resolvable = false;
    }
    if (resolvable) {
      int depth = 1;
      for (const auto& c : store.checkpoints())
        if (c.scope == agent && c.seq > target->seq) ++depth;
      if (depth > depth_limit) resolvable = false;
    }

    if (resolvable) {
      // Everything the rollback will discard, minus the victims, comes back.
      const auto snap_it = target->live_snapshot.find(agent);
      const std::set<std::string> snap =
          snap_it == target->live_snapshot.end() ? std::set<std::string>{}
                                                 : snap_it->second;
      std::vector<Assertion> readmit;
      for (const auto& a : live) {
        if (victims.count(a.id)) continue;
        if (snap.count(a.id)) continue;
        if (a.is_protected && a.born_at > target->time) continue;
        readmit.push_back(a);
      }
      std::sort(readmit.begin(), readmit.end(),
                [](const Assertion& a, const Assertion& b) {
                  if (a.born_at != b.born_at) return a.born_at < b.born_at;
                  return a.id < b.id;
                });

      store.backtrack_local(agent, *target, depth_limit);
      for (const auto& a : readmit) store.assert_statement(agent, a);

      std::ostringstream action;
      action << "backtrack to " << target->id << "; discarded";
      for (const auto& id : victims) {
        const Assertion* a = base.find(id);
        action << " " << id << "(" << (a ? a->describe() : "?") << ")";
      }
      out.local_backtracking_action = action.str();
    } else {
      // Leave the state untouched; escalation will handle it.
      for (const auto& c : conflicts)
        out.conflicts_detected.push_back(describe_conflict(base, c));
    }
  }

  for (const auto& a : new_evidence)
    if (base.is_live(agent, a.id)) out.verified_facts.push_back(fact_line(a));
  return out;
}

std::optional<std::string> assembly_escalation(const KnowledgeBase& base,
                                               const PredicateRegistry& reg,
                                               std::int64_t now) {
  const auto live = base.global_live();
  if (is_consistent(live, reg)) return std::nullopt;
  const ConflictReport psi = minimal_conflict_set(live, reg, now);
  return "unresolved " + describe_conflict(base, psi) + " across agents";
}

SupervisorResolution supervise(Store& store, const PredicateRegistry& reg) {
  const KnowledgeBase& base = store.base();
  SupervisorResolution res;
  res.psi = minimal_conflict_set(base.global_live(), reg, store.now());
  res.output.conflict_summary.push_back(describe_conflict(base, res.psi));

  const std::string victim = pick_victim(base, res.psi.members);
  if (victim.empty())
    raise(Err::NoCheckpointAvailable,
          "every member of the minimal conflict set is protected");
  res.victims.push_back(victim);

  const Assertion* v = base.find(victim);
  const Checkpoint* r = store.latest_checkpoint_before(kGlobalScope, v->born_at);
  if (!r)
    raise(Err::NoCheckpointAvailable,
          "no global checkpoint precedes the retraction victim " + victim);

  store.backtrack_global(*r);
  res.rolled_back = true;
  res.checkpoint_id = r->id;
  res.output.global_backtracking_decision = "rollback to " + r->id;
  res.output.reasoning_notes =
      "retraction victim " + victim + " (" + v->describe() +
      "); restored latest global checkpoint preceding its birth";
  for (const auto& a : base.global_live())
    res.output.updated_consensus_state.push_back(fact_line(a));
  return res;
}

ControllerDecision control(Store& store, const PredicateRegistry& reg,
                           const ConflictReport& psi, int recurrences) {
  (void)reg;
  const KnowledgeBase& base = store.base();
  ControllerDecision dec;
  dec.output.rationale =
      "conflict set recurred " + std::to_string(recurrences) +
      " time(s) or could not be resolved by rollback";
  dec.output.meta_notes = "no reliability model; recurrence-count trigger";

  std::string victim = pick_victim(base, psi.members);
  bool needs_override = false;
  if (victim.empty()) {
    victim = pick_victim(base, psi.members, /*include_protected=*/true);
    needs_override = true;
  }
  if (victim.empty()) {
    dec.output.intervention_type = ControllerOutput::Intervention::None;
    dec.output.target_of_intervention = "nothing live to act on";
    return dec;
  }

  const Assertion* a = base.find(victim);
  dec.output.target_of_intervention = victim + " (" + a->describe() + ")";
  dec.retracted_id = victim;

  std::vector<std::string> holders;
  for (const auto& owner : base.owners())
    if (base.is_live(owner, victim)) holders.push_back(owner);

  if (needs_override) {
    dec.output.intervention_type = ControllerOutput::Intervention::Override;
    for (const auto& owner : holders)
      store.retract_statement(owner, victim, "controller", EntryKind::Override);
  } else {
    dec.output.intervention_type = ControllerOutput::Intervention::Challenge;
    store.append_event(EntryKind::Challenge, "controller",
                       json{{"target", victim},
                            {"rationale", dec.output.rationale}});
    for (const auto& owner : holders)
      store.retract_statement(owner, victim, "controller");
  }
  return dec;
}

}  // namespace reagent
