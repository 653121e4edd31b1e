#include "reagent/assertion.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace reagent {

Polarity polarity_from(std::string_view s) {
  const std::string c = canonical(s);
  if (c == "positive") return Polarity::Positive;
  if (c == "negative") return Polarity::Negative;
  raise(Err::ParseError, "unknown polarity '" + std::string(s) + "'");
}

std::string canonical(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) {
    out.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(s[i]))));
  }
  return out;
}

std::string Assertion::triple_key() const {
  return canonical(subject) + "\x1f" + canonical(predicate) + "\x1f" +
         canonical(object);
}

std::string Assertion::literal_key() const {
  return triple_key() + "\x1f" + polarity_name(polarity);
}

std::string Assertion::describe() const {
  std::string out;
  if (polarity == Polarity::Negative) out += "not ";
  out += subject + " " + predicate + " " + object;
  return out;
}

bool Assertion::same_triple(const Assertion& other) const {
  return triple_key() == other.triple_key();
}

bool Assertion::same_literal(const Assertion& other) const {
  return literal_key() == other.literal_key();
}

json Assertion::to_json() const {
  return json{{"id", id},
              {"subject", subject},
              {"predicate", predicate},
              {"object", object},
              {"polarity", polarity_name(polarity)},
              {"confidence", confidence},
              {"source", source},
              {"born_at", born_at},
              {"protected", is_protected}};
}

Assertion Assertion::from_json(const json& j) {
  if (!j.is_object()) raise(Err::ParseError, "assertion must be an object");
  Assertion a;
  try {
    a.id = j.at("id").get<std::string>();
    a.subject = j.at("subject").get<std::string>();
    a.predicate = j.at("predicate").get<std::string>();
    a.object = j.at("object").get<std::string>();
    a.polarity = polarity_from(j.at("polarity").get<std::string>());
    a.confidence = j.at("confidence").get<double>();
    a.source = j.value("source", std::string{});
    a.born_at = j.value("born_at", std::int64_t{0});
    a.is_protected = j.value("protected", false);
  } catch (const json::exception& e) {
    raise(Err::ParseError, std::string("bad assertion: ") + e.what());
  }
  if (a.confidence < 0.0 || a.confidence > 1.0)
    raise(Err::ParseError, "confidence out of [0,1] for '" + a.id + "'");
  if (a.born_at < 0) raise(Err::ParseError, "born_at < 0 for '" + a.id + "'");
  return a;
}

PredicateRegistry::PredicateRegistry(
    const std::vector<PredicateSchema>& schemas) {
  for (const auto& s : schemas) add(s);
}

void PredicateRegistry::add(const PredicateSchema& schema) {
  const std::string key = canonical(schema.name);
  if (key.empty()) raise(Err::InvalidArgument, "empty predicate name");
  auto [it, inserted] = schemas_.emplace(key, schema);
  if (!inserted && it->second.functional != schema.functional)
    raise(Err::InvalidArgument, "predicate '" + schema.name +
                                    "' registered twice with different "
                                    "functional flags");
}

bool PredicateRegistry::is_functional(std::string_view predicate) const {
  auto it = schemas_.find(canonical(predicate));
  return it != schemas_.end() && it->second.functional;
}

bool PredicateRegistry::known(std::string_view predicate) const {
  return schemas_.count(canonical(predicate)) > 0;
}

PredicateRegistry PredicateRegistry::from_json(const json& j) {
  PredicateRegistry reg;
  if (!j.is_object() || !j.contains("predicates") ||
      !j["predicates"].is_array())
    raise(Err::ParseError, "expected {\"predicates\":[...]}");
  for (const auto& p : j["predicates"]) {
    PredicateSchema s;
    try {
      s.name = p.at("name").get<std::string>();
      s.functional = p.value("functional", false);
    } catch (const json::exception& e) {
      raise(Err::ParseError, std::string("bad predicate entry: ") + e.what());
    }
    reg.add(s);
  }
  return reg;
}

PredicateRegistry PredicateRegistry::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::ParseError, "cannot open predicate file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Err::ParseError, path + ": " + e.what());
  }
  return from_json(j);
}

json PredicateRegistry::to_json() const {
  json arr = json::array();
  for (const auto& [_, s] : schemas_)
    arr.push_back({{"name", s.name}, {"functional", s.functional}});
  return json{{"predicates", arr}};
}

namespace {

std::vector<std::string> split_pipes(std::string_view line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : line) {
    if (c == '|') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::optional<ParsedFact> parse_fact_line(std::string_view line) {
  auto parts = split_pipes(line);
  if (parts.size() < 5) return std::nullopt;
  ParsedFact f;
  f.assertion.subject = trim(parts[0]);
  f.assertion.predicate = trim(parts[1]);
  f.assertion.object = trim(parts[2]);
  if (f.assertion.subject.empty() || f.assertion.predicate.empty() ||
      f.assertion.object.empty())
    return std::nullopt;
  const std::string pol = canonical(parts[3]);
  if (pol == "positive")
    f.assertion.polarity = Polarity::Positive;
  else if (pol == "negative")
    f.assertion.polarity = Polarity::Negative;
  else
    return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string conf_str = trim(parts[4]);
    f.assertion.confidence = std::stod(conf_str, &used);
    if (used != conf_str.size()) return std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (f.assertion.confidence < 0.0 || f.assertion.confidence > 1.0)
    return std::nullopt;
  for (std::size_t i = 5; i < parts.size(); ++i) {
    const std::string extra = trim(parts[i]);
    if (extra.empty()) continue;
    if (canonical(extra) == "protected")
      f.assertion.is_protected = true;
    else
      f.doc = extra;
  }
  return f;
}

std::string fact_line(const Assertion& a) {
  std::ostringstream os;
  os << a.subject << " | " << a.predicate << " | " << a.object << " | "
     << polarity_name(a.polarity) << " | " << a.confidence;
  if (a.is_protected) os << " | protected";
  return os.str();
}

}  // namespace reagent
