#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reagent/errors.hpp"

namespace reagent {

using json = nlohmann::json;

enum class Polarity { Positive, Negative };

inline const char* polarity_name(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

Polarity polarity_from(std::string_view s);

/// Trim surrounding whitespace and case-fold (ASCII) for value comparison.
std::string canonical(std::string_view s);

/// A polarized subject/predicate/object statement; the unit of all knowledge.
struct Assertion {
  std::string id;
  std::string subject;
  std::string predicate;
  std::string object;
  Polarity polarity = Polarity::Positive;
  double confidence = 1.0;
  std::string source;
  std::int64_t born_at = 0;
  bool is_protected = false;  // serialized as "protected"

  /// canonical subject|predicate|object (polarity excluded).
  std::string triple_key() const;
  /// triple_key plus polarity; equal keys mean the same literal statement.
  std::string literal_key() const;

  /// Human-readable "subject predicate object" one-liner for traces.
  std::string describe() const;

  bool same_triple(const Assertion& other) const;
  bool same_literal(const Assertion& other) const;

  json to_json() const;
  static Assertion from_json(const json& j);
};

struct PredicateSchema {
  std::string name;
  bool functional = false;  // at most one object per subject
};

/// Registry of predicate schemas; names are canonicalized and unique.
class PredicateRegistry {
 public:
  PredicateRegistry() = default;
  explicit PredicateRegistry(const std::vector<PredicateSchema>& schemas);

  void add(const PredicateSchema& schema);
  bool is_functional(std::string_view predicate) const;
  bool known(std::string_view predicate) const;
  std::size_t size() const { return schemas_.size(); }

  /// Loads {"predicates":[{"name":...,"functional":...},...]}.
  static PredicateRegistry from_json(const json& j);
  static PredicateRegistry load_file(const std::string& path);

  json to_json() const;

 private:
  std::map<std::string, PredicateSchema> schemas_;  // canonical name -> schema
};

/// Parses the deterministic fact pattern
///   subject | predicate | object | polarity | confidence [| doc-or-flag ...]
/// Trailing fields: the literal "protected" marks a protected axiom; any other
/// trailing field names the supporting document. Returns nullopt for lines
/// that do not fit the pattern (those become inform-only messages upstream).
struct ParsedFact {
  Assertion assertion;          // id/source/born_at left for the caller
  std::string doc;              // supporting document id, may be empty
};
std::optional<ParsedFact> parse_fact_line(std::string_view line);

/// Renders an assertion back into the fact-pattern form.
std::string fact_line(const Assertion& a);

}  // namespace reagent
