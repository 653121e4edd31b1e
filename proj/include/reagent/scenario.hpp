#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reagent/assertion.hpp"

namespace reagent {

/// A claim fired onto the bus at a given round, concurrently with regular
/// sub-question work (the cross-agent conflict trigger).
struct Injection {
  int round = 1;
  std::string agent = "retriever";
  std::string fact;          // fact-pattern line
  std::string doc;           // supporting document id, may be empty
  std::string sub_question;  // owning sub-question for re-query, may be empty
};

struct TemporalDecl {
  std::string kind;  // "always" | "eventually"
  std::string proposition;  // fact-pattern line
};

struct PuzzleHypothesis {
  std::string name;
  std::vector<std::string> facts;  // fact-pattern lines admitted under it
};

/// One scripted run: canned agent replies plus the events that drive the
/// conflict machinery. Doubles as the puzzle container.
struct Scenario {
  std::string name;
  std::string question;
  std::string gold_answer;
  std::vector<PredicateSchema> predicates;
  json script = json::object();  // role -> key -> canned reply
  std::map<std::string, std::string> partial_answers;  // sub-question -> text
  std::vector<Injection> injections;
  std::vector<TemporalDecl> temporal;
  json config_patch = json::object();  // engine config overrides
  std::vector<PuzzleHypothesis> hypotheses;

  bool is_puzzle() const { return !hypotheses.empty(); }

  static Scenario from_json(const json& j);
  static Scenario load_file(const std::string& path);
  json to_json() const;
};

/// A file holding either one scenario or {"scenarios":[...]}.
struct ScenarioSet {
  std::vector<Scenario> scenarios;

  const Scenario* by_question(const std::string& q) const;
  static ScenarioSet load_file(const std::string& path);
};

}  // namespace reagent
