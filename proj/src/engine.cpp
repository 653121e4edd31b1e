#include "reagent/engine.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

namespace reagent {

namespace {

const std::vector<std::string> kCoreAgents = {
    "decomposer", "retriever", "verifier",
    "assembler",  "supervisor", "controller"};

Assertion pattern_from_line(const std::string& line) {
  auto parsed = parse_fact_line(line);
  if (!parsed)
    raise(Err::ParseError, "bad fact pattern: \"" + line + "\"");
  return parsed->assertion;
}

}  // namespace

double EngineConfig::temperature_for(AgentRole role) const {
  auto it = temperatures.find(role_name(role));
  if (it != temperatures.end()) return it->second;
  return role == AgentRole::Decomposer ? 0.8 : 0.6;
}

void EngineConfig::validate() const {
  if (max_subquestions < 1)
    raise(Err::ConfigError, "max_subquestions must be >= 1");
  if (local_bt_depth < 0 || local_bt_depth > 8)
    raise(Err::ConfigError, "local_bt_depth must be in 0..8");
  if (max_global_rollbacks < 0)
    raise(Err::ConfigError, "max_global_rollbacks must be >= 0");
  if (max_rounds < 1) raise(Err::ConfigError, "max_rounds must be >= 1");
  if (top_m < 1) raise(Err::ConfigError, "top_M must be >= 1");
  if (k_cand < 1) raise(Err::ConfigError, "k_cand must be >= 1");
  if (workers < 1) raise(Err::ConfigError, "workers must be >= 1");
  if (backend != "scripted" && backend != "http")
    raise(Err::ConfigError, "backend must be scripted or http");
  for (const auto& [role, t] : temperatures) {
    role_from(role);  // validates the key
    if (t < 0.0 || t > 2.0)
      raise(Err::ConfigError, "temperature for " + role + " out of [0,2]");
  }
}

EngineConfig EngineConfig::defaults() { return EngineConfig{}; }

void EngineConfig::apply_patch(const json& patch) {
  if (!patch.is_object()) raise(Err::ConfigError, "config must be an object");
  for (const auto& [key, value] : patch.items()) {
    try {
      if (key == "max_subquestions") max_subquestions = value.get<int>();
      else if (key == "local_bt_depth") local_bt_depth = value.get<int>();
      else if (key == "max_global_rollbacks")
        max_global_rollbacks = value.get<int>();
      else if (key == "max_rounds") max_rounds = value.get<int>();
      else if (key == "top_M") top_m = value.get<int>();
      else if (key == "k_cand") k_cand = value.get<int>();
      else if (key == "workers") workers = value.get<int>();
      else if (key == "seed") seed = value.get<std::uint64_t>();
      else if (key == "backend") backend = value.get<std::string>();
      else if (key == "temperatures") {
        for (const auto& [role, t] : value.items())
          temperatures[role] = t.get<double>();
      } else if (key == "http") {
        if (value.contains("base_url"))
          http_base_url = value["base_url"].get<std::string>();
        if (value.contains("model"))
          http_model = value["model"].get<std::string>();
      } else {
        raise(Err::ConfigError, "unknown config field '" + key + "'");
      }
    } catch (const json::exception& e) {
      raise(Err::ConfigError, "config field '" + key + "': " + e.what());
    }
  }
}

EngineConfig EngineConfig::from_json(const json& j) {
  EngineConfig cfg;
  cfg.apply_patch(j);
  return cfg;
}

EngineConfig EngineConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::ConfigError, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Err::ConfigError, path + ": " + e.what());
  }
  return from_json(j);
}

json EngineConfig::to_json() const {
  json temps = json::object();
  for (const auto& [role, t] : temperatures) temps[role] = t;
  return json{{"max_subquestions", max_subquestions},
              {"local_bt_depth", local_bt_depth},
              {"max_global_rollbacks", max_global_rollbacks},
              {"max_rounds", max_rounds},
              {"top_M", top_m},
              {"k_cand", k_cand},
              {"workers", workers},
              {"seed", seed},
              {"backend", backend},
              {"temperatures", temps},
              {"http", json{{"base_url", http_base_url},
                            {"model", http_model}}}};
}

json RunCounters::to_json() const {
  return json{{"local_backtracks", local_backtracks},
              {"global_rollbacks", global_rollbacks},
              {"challenges", challenges},
              {"overrides", overrides},
              {"backend_calls", backend_calls}};
}

json RunTrace::to_json(const Journal& journal) const {
  json subs = json::array();
  for (const auto& s : sub_questions) {
    subs.push_back(json{{"text", s.text},
                        {"status", s.status},
                        {"partial_answer", s.partial_answer},
                        {"fact_ids", s.fact_ids},
                        {"requeries", s.requeries},
                        {"verifier", s.last_verifier.to_json()}});
  }
  json hyps = json::array();
  for (const auto& h : hypotheses)
    hyps.push_back(json{{"name", h.name},
                        {"consistent", h.consistent},
                        {"rolled_back", h.rolled_back}});
  json entries = json::array();
  for (const auto& e : journal.entries()) entries.push_back(e.to_json());
  return json{{"question", question},
              {"outcome", outcome},
              {"answer", answer},
              {"rounds", rounds},
              {"counters", counters.to_json()},
              {"sub_questions", subs},
              {"temporal_warnings", temporal_warnings},
              {"temporal_violations", temporal_violations},
              {"ambiguous", ambiguous},
              {"hypotheses", hyps},
              {"assembler", assembler_record},
              {"answer_supported", answer_supported},
              {"journal", entries}};
}

Engine::Engine(EngineConfig cfg, Backend& backend, const Scenario* scenario,
               const SearchIndex* index, PredicateRegistry reg)
    : cfg_(std::move(cfg)),
      backend_(backend),
      scenario_(scenario),
      index_(index),
      reg_(std::move(reg)) {
  if (scenario_ && scenario_->config_patch.is_object() &&
      !scenario_->config_patch.empty())
    cfg_.apply_patch(scenario_->config_patch);
  cfg_.validate();
  if (!scenario_ && !index_)
    raise(Err::ConfigError, "need a scenario or an ingested corpus");
  scripted_ = dynamic_cast<ScriptedBackend*>(&backend_);
  if (scenario_)
    for (const auto& p : scenario_->predicates) reg_.add(p);
  bus_ = std::make_unique<MessageBus>(store_, reg_);
  for (const auto& a : kCoreAgents) bus_->register_agent(a);
  if (scenario_)
    for (const auto& inj : scenario_->injections)
      bus_->register_agent(inj.agent);
}

RunCounters Engine::counters_from_journal() const {
  RunCounters c;
  for (const auto& e : store_.journal().entries()) {
    switch (e.kind) {
      case EntryKind::Rollback:
        if (e.payload.value("scope", std::string{}) == kGlobalScope)
          ++c.global_rollbacks;
        else
          ++c.local_backtracks;
        break;
      case EntryKind::Challenge: ++c.challenges; break;
      case EntryKind::Override: ++c.overrides; break;
      case EntryKind::Message:
        if (e.actor == "backend") ++c.backend_calls;
        break;
      default: break;
    }
  }
  return c;
}

void Engine::journal_backend_call(AgentRole role, const std::string& key,
                                  int attempts) {
  for (int i = 1; i <= attempts; ++i)
    store_.append_event(EntryKind::Message, "backend",
                        json{{"role", role_name(role)},
                             {"key", key},
                             {"attempt", i}});
}

std::string Engine::scripted_key(AgentRole role, const std::string& base_key,
                                 int requery) const {
  if (requery > 0 && scripted_) {
    const std::string keyed =
        base_key + " [requery " + std::to_string(requery) + "]";
    if (scripted_->has(role, keyed)) return keyed;
  }
  return base_key;
}

Engine::WorkItem Engine::process_subquestion(std::size_t i) {
  WorkItem item;
  item.index = i;
  const std::string& q = sub_questions_[i];
  const int requery = trace_.sub_questions[i].requeries;
  // read-only lookup: this runs on parallel workers
  static const std::set<std::string> kNoExclusions;
  const auto excl_it = excluded_docs_.find(q);
  const std::set<std::string>& excluded =
      excl_it == excluded_docs_.end() ? kNoExclusions : excl_it->second;

  RetrieverOutput evidence;
  if (scenario_) {
    const std::string key = scripted_key(AgentRole::Retriever, q, requery);
    const BackendResult res = invoke_backend(
        backend_, AgentRole::Retriever, key, key,
        cfg_.temperature_for(AgentRole::Retriever),
        [](const json& j) { RetrieverOutput::from_json(j); });
    item.backend_attempts_retriever = res.attempts;
    evidence = RetrieverOutput::from_json(res.value);
    // Challenged documents stay out even in scripted mode.
    if (!excluded.empty()) {
      auto& ev = evidence.retrieved_evidence;
      ev.erase(std::remove_if(ev.begin(), ev.end(),
                              [&](const EvidenceItem& e) {
                                return excluded.count(e.source) > 0;
                              }),
               ev.end());
    }
  } else {
    const auto hits = index_->retrieve(q, cfg_.top_m, 60, cfg_.k_cand, excluded);
    double max_score = hits.empty() ? 1.0 : hits.front().score;
    if (max_score <= 0.0) max_score = 1.0;
    for (const auto& h : hits) {
      const Document* d = index_->doc(h.doc_id);
      EvidenceItem e;
      e.source = h.doc_id;
      e.content = d->title.empty() ? d->text : d->title + ": " + d->text;
      e.confidence = h.score / max_score;
      evidence.retrieved_evidence.push_back(std::move(e));
    }
    evidence.retrieval_reasoning =
        "reciprocal-rank fusion over sparse and dense channels";
  }

  if (evidence.retrieved_evidence.empty()) {
    item.retrieval_failed = true;
    item.evidence = std::move(evidence);
    return item;
  }

  // Fact extraction. Scenario runs key the verifier table by sub-question;
  // live runs prompt with the evidence body.
  std::ostringstream body;
  body << "Sub-question: " << q << "\nEvidence:\n";
  for (const auto& e : evidence.retrieved_evidence)
    body << "- [" << e.source << "] " << e.content << "\n";
  const std::string vkey = scripted_key(AgentRole::Verifier, q, requery);
  const BackendResult res = invoke_backend(
      backend_, AgentRole::Verifier, vkey, body.str(),
      cfg_.temperature_for(AgentRole::Verifier),
      [](const json& j) { VerifierOutput::from_json(j); });
  item.backend_attempts_verifier = res.attempts;
  const VerifierOutput vout = VerifierOutput::from_json(res.value);
  for (const auto& line : vout.verified_facts) {
    if (parse_fact_line(line))
      item.fact_lines.push_back(line);
    else
      item.unparsable.push_back(line);
  }
  item.evidence = std::move(evidence);
  return item;
}

void Engine::commit_work(const WorkItem& item) {
  const std::string& q = sub_questions_[item.index];
  if (item.backend_attempts_retriever > 0)
    journal_backend_call(AgentRole::Retriever, q,
                         item.backend_attempts_retriever);

  Message inform;
  inform.sender = "retriever";
  inform.kind = MessageKind::Inform;
  inform.payload = json{{"sub_question", q},
                        {"evidence", item.evidence.to_json()}};
  bus_->send(std::move(inform));

  SubQuestionTrace& st = trace_.sub_questions[item.index];
  if (item.retrieval_failed) {
    st.status = "failed";
    return;
  }
  st.status = "resolved";  // facts (if any) land at the round's delivery
  if (scenario_) {
    auto pa = scenario_->partial_answers.find(q);
    if (pa != scenario_->partial_answers.end()) st.partial_answer = pa->second;
  }
  if (item.backend_attempts_verifier > 0)
    journal_backend_call(AgentRole::Verifier, q,
                         item.backend_attempts_verifier);

  for (const auto& line : item.fact_lines) {
    auto parsed = parse_fact_line(line);
    Assertion a = parsed->assertion;
    a.id = store_.mint_assertion_id();
    a.source = "verifier";
    Message m;
    m.sender = "verifier";
    m.kind = MessageKind::Assert;
    m.payload = json{{"assertion", a.to_json()}, {"sub_question", q}};
    if (!parsed->doc.empty()) m.payload["doc"] = parsed->doc;
    bus_->send(std::move(m));
  }
  for (const auto& line : item.unparsable) {
    Message m;
    m.sender = "verifier";
    m.kind = MessageKind::Inform;
    m.payload = json{{"text", line}, {"sub_question", q}};
    bus_->send(std::move(m));
  }
}

void Engine::admit_composite(const CompositeEvent& ev) {
  // Verifier asserts are admitted per sub-question batch (grouped in order of
  // first appearance); other agents' asserts land directly in their own sets.
  std::vector<std::string> batch_order;
  std::map<std::string, std::vector<Assertion>> batches;

  for (const auto& m : ev.messages) {
    if (m.kind != MessageKind::Assert) continue;
    if (!m.payload.is_object() || !m.payload.contains("assertion")) continue;
    Assertion a = Assertion::from_json(m.payload["assertion"]);
    const std::string subq = m.payload.value("sub_question", std::string{});
    const std::string doc = m.payload.value("doc", std::string{});
    if (!subq.empty()) fact_subq_[a.id] = subq;
    if (!doc.empty()) fact_doc_[a.id] = doc;

    if (m.sender == "verifier") {
      if (batches.find(subq) == batches.end()) batch_order.push_back(subq);
      batches[subq].push_back(std::move(a));
    } else {
      store_.assert_statement(m.sender, std::move(a));
    }
  }

  for (const auto& subq : batch_order) {
    VerifierOutput vout = verify_admit(store_, reg_, "verifier",
                                       batches[subq], cfg_.local_bt_depth);
    store_.take_checkpoint("verifier");  // one per completed sub-question
    auto it = subq_index_.find(subq);
    if (it == subq_index_.end()) continue;
    SubQuestionTrace& st = trace_.sub_questions[it->second];
    st.last_verifier = vout;
    st.last_batch.clear();
    for (const auto& a : batches[subq]) {
      st.fact_ids.push_back(a.id);
      st.last_batch.push_back(a.id);
    }
  }
}

void Engine::repend_starved_subquestions() {
  for (auto& st : trace_.sub_questions) {
    if (st.status != "resolved" || st.last_batch.empty()) continue;
    bool any_live = false;
    for (const auto& id : st.last_batch)
      any_live |= store_.base().is_live("verifier", id);
    if (!any_live) {
      st.status = "pending";
      ++st.requeries;
    }
  }
}

bool Engine::resolve_global_conflicts() {
  const std::size_t live_bound = store_.base().assertion_count() + 1;
  for (std::size_t guard = 0; guard <= live_bound; ++guard) {
    const auto global_live = store_.base().global_live();
    if (is_consistent(global_live, reg_)) return true;

    const ConflictReport psi =
        minimal_conflict_set(global_live, reg_, store_.now());
    std::vector<std::string> keys;
    for (const auto& id : psi.members) {
      const Assertion* a = store_.base().find(id);
      keys.push_back(a ? a->literal_key() : id);
    }
    std::sort(keys.begin(), keys.end());
    std::string content_key;
    for (const auto& k : keys) content_key += k + "||";
    const int seen = ++psi_seen_[content_key];

    bool handled = false;
    // Two strikes of the same conflict set send it to the controller; a
    // first occurrence goes through the supervisor's global rollback.
    if (seen < 2) {
      if (rollbacks_done_ >= cfg_.max_global_rollbacks) return false;
      try {
        const SupervisorResolution res = supervise(store_, reg_);
        ++rollbacks_done_;
        handled = true;
        for (const auto& v : res.victims) {
          auto sq = fact_subq_.find(v);
          if (sq != fact_subq_.end()) {
            auto doc = fact_doc_.find(v);
            if (doc != fact_doc_.end()) excluded_docs_[sq->second].insert(doc->second);
          }
        }
      } catch (const Error& e) {
        if (e.code() != Err::NoCheckpointAvailable) throw;
      }
    }
    if (!handled) {
      const ControllerDecision dec = control(store_, reg_, psi, seen);
      if (dec.retracted_id.empty()) return false;
      auto sq = fact_subq_.find(dec.retracted_id);
      if (sq != fact_subq_.end()) {
        auto doc = fact_doc_.find(dec.retracted_id);
        if (doc != fact_doc_.end())
          excluded_docs_[sq->second].insert(doc->second);
        auto idx = subq_index_.find(sq->second);
        if (idx != subq_index_.end() &&
            trace_.sub_questions[idx->second].status == "resolved") {
          trace_.sub_questions[idx->second].status = "pending";
          ++trace_.sub_questions[idx->second].requeries;
        }
      }
    }
    repend_starved_subquestions();
  }
  return false;
}

AssemblerOutput Engine::assemble_now() {
  AssemblerOutput out;
  if (const auto escalation =
          assembly_escalation(store_.base(), reg_, store_.now())) {
    out.escalation_signal = *escalation;
    return out;
  }

  std::vector<std::string> partials;
  for (const auto& st : trace_.sub_questions)
    if (!st.partial_answer.empty()) partials.push_back(st.partial_answer);
  const auto verifier_live = store_.base().live_of("verifier");

  json inputs{{"partials", partials}, {"facts", json::array()}};
  for (const auto& a : verifier_live)
    inputs["facts"].push_back(fact_line(a));

  const bool scripted_hit =
      scripted_ && scripted_->has(AgentRole::Assembler, trace_.question);
  if (scripted_hit || !scripted_) {
    std::ostringstream body;
    body << "Question: " << trace_.question << "\nPartial answers:\n";
    for (const auto& p : partials) body << "- " << p << "\n";
    body << "Verified facts:\n";
    for (const auto& a : verifier_live) body << "- " << fact_line(a) << "\n";
    const BackendResult res = invoke_backend(
        backend_, AgentRole::Assembler, trace_.question, body.str(),
        cfg_.temperature_for(AgentRole::Assembler),
        [](const json& j) { AssemblerOutput::from_json(j); });
    journal_backend_call(AgentRole::Assembler, trace_.question, res.attempts);
    out = AssemblerOutput::from_json(res.value);
  } else {
    // No scripted entry: deterministic synthesis from partials/facts.
    std::set<std::string> unique(partials.begin(), partials.end());
    if (unique.size() == 1) {
      out.final_answer = *unique.begin();
    } else if (!partials.empty()) {
      out.final_answer = partials.back();
    } else if (verifier_live.size() == 1) {
      out.final_answer = verifier_live.front().object;
    }
    out.partial_answer_synthesis = partials;
    out.escalation_signal = "none";
  }

  trace_.assembler_record = json{{"inputs", inputs}, {"output", out.to_json()}};
  const std::string folded_answer = canonical(out.final_answer);
  std::string haystack;
  for (const auto& p : partials) haystack += canonical(p) + " ";
  for (const auto& a : verifier_live) haystack += canonical(fact_line(a)) + " ";
  trace_.answer_supported =
      !folded_answer.empty() && haystack.find(folded_answer) != std::string::npos;
  return out;
}

void Engine::finish_trace(const std::string& outcome,
                          const std::string& answer) {
  trace_.outcome = outcome;
  trace_.answer = answer;
  trace_.counters = counters_from_journal();
  for (const auto& v : store_.temporal_violations())
    trace_.temporal_violations.push_back(v.description);
  for (const auto& c : store_.unmet_eventualities())
    trace_.temporal_warnings.push_back("unmet " + c.describe());
}

RunResult Engine::run_question(const std::string& question) {
  if (ran_) raise(Err::InvalidArgument, "one run per engine instance");
  ran_ = true;
  trace_.question = question;

  try {
    store_.take_checkpoint(kGlobalScope);
    store_.take_checkpoint("verifier");
    if (scenario_) {
      for (const auto& t : scenario_->temporal) {
        TemporalConstraint c;
        c.kind = t.kind == "always" ? TemporalConstraint::Kind::Always
                                    : TemporalConstraint::Kind::Eventually;
        c.proposition = pattern_from_line(t.proposition);
        c.created_at = store_.now();
        store_.register_temporal(std::move(c));
      }
    }

    DecomposeParams params;
    params.m_max = cfg_.max_subquestions;
    params.temperature = cfg_.temperature_for(AgentRole::Decomposer);
    const DecomposeCall dec = decompose(backend_, question, params);
    journal_backend_call(AgentRole::Decomposer, question, dec.backend_calls);
    std::set<std::string> seen;
    for (const auto& q : dec.output.sub_questions)
      if (seen.insert(q).second) sub_questions_.push_back(q);
    for (std::size_t i = 0; i < sub_questions_.size(); ++i) {
      subq_index_[sub_questions_[i]] = i;
      SubQuestionTrace st;
      st.text = sub_questions_[i];
      trace_.sub_questions.push_back(std::move(st));
      Message m;
      m.sender = "decomposer";
      m.kind = MessageKind::Assert;
      m.payload = json{{"sub_question", sub_questions_[i]}};
      bus_->send(std::move(m));
    }
    bus_->deliver_round();

    std::string outcome;
    std::string answer;

    for (int round = 1; round <= cfg_.max_rounds; ++round) {
      trace_.rounds = round;

      std::vector<std::size_t> pending;
      for (std::size_t i = 0; i < trace_.sub_questions.size(); ++i)
        if (trace_.sub_questions[i].status == "pending") pending.push_back(i);

      std::vector<Injection> injections_now;
      if (scenario_)
        for (const auto& inj : scenario_->injections)
          if (inj.round == round) injections_now.push_back(inj);

      if (pending.empty() && injections_now.empty() && bus_->pending() == 0) {
        const AssemblerOutput ao = assemble_now();
        if (ao.escalation_signal == "none" && !ao.final_answer.empty()) {
          outcome = "answered";
          answer = ao.final_answer;
          store_.append_event(EntryKind::FinalAnswer, "assembler",
                              json{{"answer", answer}});
          break;
        }
        const auto global_live = store_.base().global_live();
        if (is_consistent(global_live, reg_)) break;  // nothing to resolve
        if (!resolve_global_conflicts()) break;
        store_.check_temporal();
        continue;
      }

      // Sub-question work: computed in parallel (pure), committed in
      // canonical order so journals are order-independent.
      std::vector<WorkItem> items;
      items.reserve(pending.size());
      if (cfg_.workers > 1 && pending.size() > 1) {
        std::size_t next = 0;
        while (next < pending.size()) {
          std::vector<std::future<WorkItem>> futs;
          for (int w = 0; w < cfg_.workers && next < pending.size();
               ++w, ++next) {
            const std::size_t idx = pending[next];
            futs.push_back(std::async(std::launch::async, [this, idx] {
              return process_subquestion(idx);
            }));
          }
          for (auto& f : futs) items.push_back(f.get());
        }
      } else {
        for (const std::size_t idx : pending)
          items.push_back(process_subquestion(idx));
      }
      for (const auto& item : items) commit_work(item);

      for (const auto& inj : injections_now) {
        auto parsed = parse_fact_line(inj.fact);
        if (!parsed)
          raise(Err::ParseError, "bad injection fact: \"" + inj.fact + "\"");
        Assertion a = parsed->assertion;
        a.id = store_.mint_assertion_id();
        a.source = inj.agent;
        Message m;
        m.sender = inj.agent;
        m.kind = MessageKind::Assert;
        m.payload = json{{"assertion", a.to_json()}};
        if (!inj.sub_question.empty()) m.payload["sub_question"] = inj.sub_question;
        const std::string doc = !inj.doc.empty() ? inj.doc : parsed->doc;
        if (!doc.empty()) m.payload["doc"] = doc;
        bus_->send(std::move(m));
      }

      const CompositeEvent ev = bus_->deliver_round();
      admit_composite(ev);

      if (!resolve_global_conflicts()) break;

      const auto global_live = store_.base().global_live();
      if (is_consistent(global_live, reg_))
        store_.take_checkpoint(kGlobalScope);
      store_.check_temporal();
    }

    if (outcome.empty()) {
      outcome = "disclaimed";
      answer = kDisclaimed;
      store_.append_event(EntryKind::FinalAnswer, "assembler",
                          json{{"answer", answer}});
    }
    finish_trace(outcome, answer);
    return RunResult{answer, trace_};
  } catch (const Error&) {
    finish_trace("failed", "");
    throw;
  }
}

RunResult Engine::run_puzzle() {
  if (ran_) raise(Err::InvalidArgument, "one run per engine instance");
  ran_ = true;
  if (!scenario_ || !scenario_->is_puzzle())
    raise(Err::ConfigError, "run_puzzle needs a scenario with hypotheses");
  trace_.question =
      scenario_->question.empty() ? "puzzle" : scenario_->question;

  store_.take_checkpoint(kGlobalScope);
  std::vector<std::string> survivors;
  for (const auto& hyp : scenario_->hypotheses) {
    const std::string agent = "checker_" + hyp.name;
    bus_->register_agent(agent);
    const Checkpoint cp = store_.take_checkpoint(agent);
    for (const auto& line : hyp.facts) {
      Assertion a = pattern_from_line(line);
      a.id = store_.mint_assertion_id();
      a.source = agent;
      store_.assert_statement(agent, a);
    }
    const auto live = store_.base().live_of(agent);
    HypothesisTrace ht;
    ht.name = hyp.name;
    ht.consistent = is_consistent(live, reg_);
    if (!ht.consistent) {
      // Contradictory hypothesis: discard its whole working set.
      store_.backtrack_local(agent, cp, std::max(1, cfg_.local_bt_depth));
      ht.rolled_back = true;
    } else {
      survivors.push_back(hyp.name);
    }
    trace_.hypotheses.push_back(ht);
  }

  if (survivors.empty()) {
    finish_trace("disclaimed", kDisclaimed);
    raise(Err::NoConsistentHypothesis, "every hypothesis is contradictory");
  }
  trace_.ambiguous = survivors.size() > 1;
  const std::string answer = survivors.front();
  store_.append_event(EntryKind::FinalAnswer, "assembler",
                      json{{"answer", answer}});
  finish_trace("answered", answer);
  return RunResult{answer, trace_};
}

}  // namespace reagent
