#include "doctest.h"
#include "reagent/engine.hpp"

using namespace reagent;

namespace {

const std::string kData = REAGENT_DATA_DIR;

struct Loaded {
  Scenario scenario;
  ScriptedBackend backend;
};

Loaded load(const std::string& file) {
  Scenario s = Scenario::load_file(kData + "/scenarios/" + file);
  ScriptedBackend b = ScriptedBackend::from_json(s.script);
  return Loaded{std::move(s), std::move(b)};
}

RunResult run_scenario(const std::string& file, EngineConfig cfg = {},
                       std::string* journal_out = nullptr) {
  Loaded l = load(file);
  Engine engine(cfg, l.backend, &l.scenario, nullptr);
  RunResult r = l.scenario.is_puzzle() ? engine.run_puzzle()
                                       : engine.run_question(l.scenario.question);
  if (journal_out) *journal_out = engine.store().journal().to_ndjson();
  return r;
}

}  // namespace

TEST_CASE("olympics scenario: California with one local and one global "
          "rollback") {
  Loaded l = load("olympics_1984.json");
  Engine engine({}, l.backend, &l.scenario, nullptr);
  const RunResult r = engine.run_question(l.scenario.question);

  CHECK(r.answer == "California");
  CHECK(r.trace.outcome == "answered");
  CHECK(r.trace.counters.local_backtracks == 1);
  CHECK(r.trace.counters.global_rollbacks == 1);
  CHECK(r.trace.counters.challenges == 0);
  CHECK(r.trace.counters.overrides == 0);
  CHECK(r.trace.sub_questions.size() == 4);  // scenario raises the cap to 4

  // the discarded population figure is gone; the official one stays
  const auto live = engine.store().base().global_live();
  bool has_508k = false, has_15m = false, has_sac = false, has_la_cap = false;
  for (const auto& a : live) {
    if (a.predicate == "population" && a.object == "508000") has_508k = true;
    if (a.predicate == "population" && a.object == "1500000") has_15m = true;
    if (a.predicate == "capital" && a.object == "Sacramento") has_sac = true;
    if (a.predicate == "capital" && a.object == "Los Angeles")
      has_la_cap = true;
  }
  CHECK(has_508k);
  CHECK(has_sac);
  CHECK_FALSE(has_15m);
  CHECK_FALSE(has_la_cap);
  CHECK(is_consistent(live, engine.predicates()));
  CHECK(r.trace.answer_supported);

  // replay of the journal reproduces the final state
  const ReplayState st = replay(engine.store().journal().entries());
  CHECK(st.base.snapshot() == engine.store().base().snapshot());
  REQUIRE(st.final_answer.has_value());
  CHECK(*st.final_answer == "California");
}

TEST_CASE("kansas fight song: answered after one re-weighting backtrack") {
  const RunResult r = run_scenario("kansas_fight_song.json");
  CHECK(r.answer == "Kansas Song");
  CHECK(r.trace.counters.local_backtracks == 1);
  CHECK(r.trace.counters.global_rollbacks == 0);
  bool mentions_jayhawk = false;
  for (const auto& st : r.trace.sub_questions)
    mentions_jayhawk |= st.last_verifier.local_backtracking_action.find(
                            "Jayhawk") != std::string::npos;
  CHECK(mentions_jayhawk);
}

TEST_CASE("puzzle: B is the culprit; A, C, D are rolled back") {
  Loaded l = load("puzzle_four_suspects.json");
  Engine engine({}, l.backend, &l.scenario, nullptr);
  const RunResult r = engine.run_puzzle();

  CHECK(r.answer == "B");
  CHECK_FALSE(r.trace.ambiguous);
  REQUIRE(r.trace.hypotheses.size() == 4);
  for (const auto& h : r.trace.hypotheses) {
    if (h.name == "B") {
      CHECK(h.consistent);
      CHECK_FALSE(h.rolled_back);
    } else {
      CHECK_FALSE(h.consistent);
      CHECK(h.rolled_back);
    }
  }
  CHECK(r.trace.counters.local_backtracks == 3);
}

TEST_CASE("puzzle: one-hypothesis run answers without rollbacks") {
  Scenario s;
  s.question = "Who did it?";
  s.predicates = {{"culprit", true}};
  s.hypotheses = {{"X", {"case | culprit | X | positive | 0.9"}}};
  ScriptedBackend backend = ScriptedBackend::from_json(json::object());
  Engine engine({}, backend, &s, nullptr);
  const RunResult r = engine.run_puzzle();
  CHECK(r.answer == "X");
  CHECK(r.trace.counters.local_backtracks == 0);
}

TEST_CASE("puzzle: two consistent hypotheses return the first and flag "
          "ambiguity") {
  Scenario s;
  s.question = "Who did it?";
  s.predicates = {{"culprit", true}};
  s.hypotheses = {
      {"A", {"case | culprit | A | positive | 0.9",
             "case | culprit | A | negative | 0.8"}},
      {"B", {"case | culprit | B | positive | 0.9"}},
      {"C", {"case | culprit | C | positive | 0.9"}}};
  ScriptedBackend backend = ScriptedBackend::from_json(json::object());
  Engine engine({}, backend, &s, nullptr);
  const RunResult r = engine.run_puzzle();
  CHECK(r.answer == "B");
  CHECK(r.trace.ambiguous);
}

TEST_CASE("puzzle: all hypotheses contradictory raises "
          "NoConsistentHypothesis") {
  Scenario s;
  s.question = "Who did it?";
  s.predicates = {{"culprit", true}};
  s.hypotheses = {{"A", {"case | culprit | A | positive | 0.9",
                         "case | culprit | A | negative | 0.8"}}};
  ScriptedBackend backend = ScriptedBackend::from_json(json::object());
  Engine engine({}, backend, &s, nullptr);
  try {
    engine.run_puzzle();
    FAIL("expected NoConsistentHypothesis");
  } catch (const Error& e) {
    CHECK(e.code() == Err::NoConsistentHypothesis);
  }
}

TEST_CASE("adversarial re-injection disclaims after max_global_rollbacks") {
  const RunResult r = run_scenario("adversarial_disclaim.json");
  CHECK(r.answer == kDisclaimed);
  CHECK(r.trace.outcome == "disclaimed");
  CHECK(r.trace.counters.global_rollbacks == 2);  // the configured budget
}

TEST_CASE("recurring conflict set goes to the controller challenge") {
  const RunResult r = run_scenario("challenge_recovery.json");
  CHECK(r.answer == "Corallium");
  CHECK(r.trace.counters.global_rollbacks == 1);
  CHECK(r.trace.counters.challenges == 1);
  CHECK(r.trace.counters.overrides == 0);
}

TEST_CASE("protected-axiom clash is resolved by a controller override") {
  const RunResult r = run_scenario("override_protected.json");
  CHECK(r.answer == "safe");
  CHECK(r.trace.counters.overrides == 1);
  CHECK(r.trace.counters.global_rollbacks == 0);
}

TEST_CASE("budget respect: counters never exceed configured bounds") {
  for (const char* file :
       {"olympics_1984.json", "kansas_fight_song.json",
        "adversarial_disclaim.json", "challenge_recovery.json",
        "override_protected.json"}) {
    const RunResult r = run_scenario(file);
    CHECK(r.trace.counters.global_rollbacks <= 2);
    CHECK(r.trace.rounds <= 12);
    CHECK((r.trace.outcome == "answered" || r.trace.outcome == "disclaimed"));
  }
}

TEST_CASE("trace counters equal the journal entry counts") {
  Loaded l = load("olympics_1984.json");
  Engine engine({}, l.backend, &l.scenario, nullptr);
  const RunResult r = engine.run_question(l.scenario.question);

  int local = 0, global = 0, challenges = 0, overrides = 0, backend_calls = 0;
  for (const auto& e : engine.store().journal().entries()) {
    if (e.kind == EntryKind::Rollback) {
      if (e.payload.value("scope", std::string{}) == kGlobalScope)
        ++global;
      else
        ++local;
    }
    if (e.kind == EntryKind::Challenge) ++challenges;
    if (e.kind == EntryKind::Override) ++overrides;
    if (e.kind == EntryKind::Message && e.actor == "backend") ++backend_calls;
  }
  CHECK(r.trace.counters.local_backtracks == local);
  CHECK(r.trace.counters.global_rollbacks == global);
  CHECK(r.trace.counters.challenges == challenges);
  CHECK(r.trace.counters.overrides == overrides);
  CHECK(r.trace.counters.backend_calls == backend_calls);
  CHECK(r.trace.counters.backend_calls > 0);
}

TEST_CASE("identical scenario and config produce byte-identical journals") {
  for (const char* file : {"olympics_1984.json", "challenge_recovery.json"}) {
    std::string j1, j2;
    run_scenario(file, {}, &j1);
    run_scenario(file, {}, &j2);
    CHECK(j1 == j2);
    CHECK(!j1.empty());
  }
}

TEST_CASE("workers=1 and workers=4 produce the same journal") {
  std::string j1, j4;
  EngineConfig one;
  one.workers = 1;
  run_scenario("olympics_1984.json", one, &j1);
  EngineConfig four;
  four.workers = 4;
  run_scenario("olympics_1984.json", four, &j4);
  CHECK(j1 == j4);
}

TEST_CASE("ablation direction: depth 0 fails where depth 3 succeeds") {
  const ScenarioSet suite =
      ScenarioSet::load_file(kData + "/scenarios/ablation_suite.json");
  REQUIRE(suite.scenarios.size() == 10);

  auto run_suite = [&](int depth) {
    int correct = 0;
    for (const auto& s : suite.scenarios) {
      ScriptedBackend backend = ScriptedBackend::from_json(s.script);
      EngineConfig cfg;
      cfg.local_bt_depth = depth;
      Engine engine(cfg, backend, &s, nullptr);
      const RunResult r = engine.run_question(s.question);
      if (r.answer == s.gold_answer) ++correct;
    }
    return correct;
  };

  const int with_bt = run_suite(3);
  const int without_bt = run_suite(0);
  CHECK(with_bt == 10);
  CHECK(without_bt < with_bt);
  CHECK(10 - without_bt >= 3);  // at least 3 scenarios require backtracking
}

TEST_CASE("engine config: validation and patching") {
  EngineConfig cfg;
  cfg.apply_patch(json{{"max_subquestions", 4}, {"top_M", 7}});
  CHECK(cfg.max_subquestions == 4);
  CHECK(cfg.top_m == 7);
  CHECK_THROWS_AS(cfg.apply_patch(json{{"no_such_field", 1}}), Error);

  cfg.local_bt_depth = 9;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.local_bt_depth = 0;
  CHECK_NOTHROW(cfg.validate());

  CHECK(cfg.temperature_for(AgentRole::Decomposer) == 0.8);
  CHECK(cfg.temperature_for(AgentRole::Verifier) == 0.6);
  cfg.apply_patch(json{{"temperatures", json{{"verifier", 0.1}}}});
  CHECK(cfg.temperature_for(AgentRole::Verifier) == 0.1);
}

TEST_CASE("engine over a corpus index answers without a scenario") {
  const auto docs =
      SearchIndex::load_corpus_file(kData + "/corpora/olympics_mini.ndjson");
  const SearchIndex index = SearchIndex::ingest(docs);

  // A scripted backend stands in for the chat model; retrieval runs through
  // the real index.
  ScriptedBackend backend = ScriptedBackend::from_json(json{
      {"decomposer",
       {{"Which U.S. state hosted the 1984 Summer Olympics?",
         json{{"sub_questions",
               json::array({"Which state hosted the 1984 Summer Olympics?"})},
              {"decomposition_reasoning", "single hop"}}}}},
      {"verifier",
       {{"Which state hosted the 1984 Summer Olympics?",
         json{{"verified_facts",
               json::array({"1984 Summer Olympics | host_state | California | "
                            "positive | 0.95 | d1"})},
              {"conflicts_detected", json::array()},
              {"local_backtracking_action", "none"}}}}},
      {"assembler",
       {{"Which U.S. state hosted the 1984 Summer Olympics?",
         json{{"final_answer", "California"},
              {"partial_answer_synthesis",
               json::array({"California hosted the 1984 Summer Olympics"})},
              {"escalation_signal", "none"}}}}}});

  PredicateRegistry reg;
  reg.add({"host_state", true});
  Engine engine({}, backend, nullptr, &index, reg);
  const RunResult r =
      engine.run_question("Which U.S. state hosted the 1984 Summer Olympics?");
  CHECK(r.answer == "California");
}

TEST_CASE("one run per engine instance") {
  Loaded l = load("kansas_fight_song.json");
  Engine engine({}, l.backend, &l.scenario, nullptr);
  engine.run_question(l.scenario.question);
  CHECK_THROWS_AS(engine.run_question(l.scenario.question), Error);
}

TEST_CASE("re-query isolation: a challenge touches only its own "
          "sub-question") {
  Scenario s;
  s.question = "What are the capital and river of Arcadia?";
  s.predicates = {{"capital", true}, {"river", true}};
  const std::string q1 = "Find the capital of Arcadia.";
  const std::string q2 = "Find the river of Arcadia.";
  s.script = json{
      {"decomposer",
       {{s.question, json{{"sub_questions", json::array({q1, q2})},
                          {"decomposition_reasoning", "two lookups"}}}}},
      {"retriever",
       {{q1, json{{"retrieved_evidence",
                   json::array({json{{"source", "archive"},
                                     {"content", "Solis is the capital."},
                                     {"confidence", 0.9}}})},
                  {"retrieval_reasoning", ""}}},
        {q2, json{{"retrieved_evidence",
                   json::array({json{{"source", "atlas"},
                                     {"content", "The Lumen runs through."},
                                     {"confidence", 0.9}}})},
                  {"retrieval_reasoning", ""}}}}},
      {"verifier",
       {{q1, json{{"verified_facts",
                   json::array({"Arcadia | capital | Solis | positive | 0.9 | "
                                "archive"})},
                  {"conflicts_detected", json::array()},
                  {"local_backtracking_action", "none"}}},
        {q2, json{{"verified_facts",
                   json::array({"Arcadia | river | Lumen | positive | 0.9 | "
                                "atlas"})},
                  {"conflicts_detected", json::array()},
                  {"local_backtracking_action", "none"}}}}},
      {"assembler",
       {{s.question,
         json{{"final_answer", "Solis"},
              {"partial_answer_synthesis", json::array({"Solis", "Lumen"})},
              {"escalation_signal", "none"}}}}}};
  s.partial_answers = {{q1, "Solis"}, {q2, "Lumen"}};
  // the same bogus capital twice: rollback first, then controller challenge
  s.injections = {{2, "retriever", "Arcadia | capital | Umbra | positive | 0.5",
                   "rag", q1},
                  {3, "retriever", "Arcadia | capital | Umbra | positive | 0.5",
                   "rag", q1}};

  ScriptedBackend backend = ScriptedBackend::from_json(s.script);
  Engine engine({}, backend, &s, nullptr);
  const RunResult r = engine.run_question(s.question);
  CHECK(r.answer == "Solis");
  CHECK(r.trace.counters.challenges == 1);

  // q2 was never re-queried and its fact survived untouched
  REQUIRE(r.trace.sub_questions.size() == 2);
  const SubQuestionTrace& st2 = r.trace.sub_questions[1];
  CHECK(st2.requeries == 0);
  REQUIRE(st2.last_batch.size() == 1);
  CHECK(engine.store().base().is_live("verifier", st2.last_batch[0]));
  for (const auto& e : engine.store().journal().entries()) {
    if (e.kind != EntryKind::Retract && e.kind != EntryKind::Override)
      continue;
    CHECK(e.payload.value("id", std::string{}) != st2.last_batch[0]);
  }
  // the challenged sub-question was re-queried
  CHECK(r.trace.sub_questions[0].requeries >= 1);
}

TEST_CASE("backend failures surface with the trace intact") {
  Scenario s;
  s.question = "Doomed question?";
  s.script = json{
      {"decomposer",
       {{s.question, json{{"sub_questions", json::array({"q1"})},
                          {"decomposition_reasoning", ""}}}}}};
  // no retriever entry: the first work item dies with SchemaViolation
  ScriptedBackend backend = ScriptedBackend::from_json(s.script);
  Engine engine({}, backend, &s, nullptr);
  try {
    engine.run_question(s.question);
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Err::SchemaViolation);
  }
  CHECK(engine.trace().outcome == "failed");
  CHECK(engine.trace().question == s.question);
  CHECK(engine.trace().sub_questions.size() == 1);
}

TEST_CASE("temporal declarations surface violations in the trace") {
  Loaded l = load("kansas_fight_song.json");
  l.scenario.temporal.push_back(
      {"always", "Mars | capital | Olympus | positive | 1.0"});
  l.scenario.temporal.push_back(
      {"eventually",
       "University of Kansas | fight_song | Kansas Song | positive | 0.9"});
  Engine engine({}, l.backend, &l.scenario, nullptr);
  const RunResult r = engine.run_question(l.scenario.question);
  CHECK(!r.trace.temporal_violations.empty());  // the Mars axiom never holds
  CHECK(r.trace.temporal_warnings.empty());     // the song eventually appears
}
