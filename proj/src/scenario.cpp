#include "reagent/scenario.hpp"

#include <fstream>

namespace reagent {

Scenario Scenario::from_json(const json& j) {
  if (!j.is_object()) raise(Err::ParseError, "scenario must be an object");
  Scenario s;
  try {
    s.name = j.value("name", std::string{});
    s.question = j.value("question", std::string{});
    s.gold_answer = j.value("gold_answer", std::string{});
    if (j.contains("predicates")) {
      for (const auto& p : j["predicates"]) {
        PredicateSchema schema;
        schema.name = p.at("name").get<std::string>();
        schema.functional = p.value("functional", false);
        s.predicates.push_back(std::move(schema));
      }
    }
    if (j.contains("script")) s.script = j["script"];
    if (j.contains("partial_answers"))
      for (const auto& [q, a] : j["partial_answers"].items())
        s.partial_answers[q] = a.get<std::string>();
    if (j.contains("injections")) {
      for (const auto& i : j["injections"]) {
        Injection inj;
        inj.round = i.at("round").get<int>();
        inj.agent = i.value("agent", std::string{"retriever"});
        inj.fact = i.at("fact").get<std::string>();
        inj.doc = i.value("doc", std::string{});
        inj.sub_question = i.value("sub_question", std::string{});
        s.injections.push_back(std::move(inj));
      }
    }
    if (j.contains("temporal")) {
      for (const auto& t : j["temporal"]) {
        TemporalDecl d;
        d.kind = t.at("kind").get<std::string>();
        d.proposition = t.at("proposition").get<std::string>();
        if (d.kind != "always" && d.kind != "eventually")
          raise(Err::ParseError, "temporal kind must be always|eventually");
        s.temporal.push_back(std::move(d));
      }
    }
    if (j.contains("config")) s.config_patch = j["config"];
    if (j.contains("puzzle")) {
      for (const auto& h : j["puzzle"].at("hypotheses")) {
        PuzzleHypothesis hyp;
        hyp.name = h.at("name").get<std::string>();
        for (const auto& f : h.at("facts"))
          hyp.facts.push_back(f.get<std::string>());
        s.hypotheses.push_back(std::move(hyp));
      }
    }
  } catch (const json::exception& e) {
    raise(Err::ParseError, std::string("bad scenario: ") + e.what());
  }
  if (s.question.empty() && !s.is_puzzle())
    raise(Err::ParseError, "scenario needs a question (or a puzzle block)");
  return s;
}

json Scenario::to_json() const {
  json j{{"name", name}, {"question", question}};
  if (!gold_answer.empty()) j["gold_answer"] = gold_answer;
  if (!predicates.empty()) {
    json arr = json::array();
    for (const auto& p : predicates)
      arr.push_back({{"name", p.name}, {"functional", p.functional}});
    j["predicates"] = arr;
  }
  if (!script.empty()) j["script"] = script;
  if (!partial_answers.empty()) {
    json m = json::object();
    for (const auto& [q, a] : partial_answers) m[q] = a;
    j["partial_answers"] = m;
  }
  if (!injections.empty()) {
    json arr = json::array();
    for (const auto& i : injections) {
      json e{{"round", i.round}, {"agent", i.agent}, {"fact", i.fact}};
      if (!i.doc.empty()) e["doc"] = i.doc;
      if (!i.sub_question.empty()) e["sub_question"] = i.sub_question;
      arr.push_back(std::move(e));
    }
    j["injections"] = arr;
  }
  if (!config_patch.empty()) j["config"] = config_patch;
  return j;
}

Scenario Scenario::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::ParseError, "cannot open scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Err::ParseError, path + ": " + e.what());
  }
  return from_json(j);
}

const Scenario* ScenarioSet::by_question(const std::string& q) const {
  for (const auto& s : scenarios)
    if (s.question == q) return &s;
  return nullptr;
}

ScenarioSet ScenarioSet::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::ParseError, "cannot open scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Err::ParseError, path + ": " + e.what());
  }
  ScenarioSet set;
  if (j.is_object() && j.contains("scenarios")) {
    for (const auto& s : j["scenarios"])
      set.scenarios.push_back(Scenario::from_json(s));
  } else {
    set.scenarios.push_back(Scenario::from_json(j));
  }
  return set;
}

}  // namespace reagent
