#include "reagent/backend.hpp"

#include <cstdlib>

#include "httplib.h"

namespace reagent {

const char* role_name(AgentRole r) {
  switch (r) {
    case AgentRole::Decomposer: return "decomposer";
    case AgentRole::Retriever: return "retriever";
    case AgentRole::Verifier: return "verifier";
    case AgentRole::Assembler: return "assembler";
    case AgentRole::Supervisor: return "supervisor";
    case AgentRole::Controller: return "controller";
  }
  return "unknown";
}

AgentRole role_from(std::string_view s) {
  if (s == "decomposer") return AgentRole::Decomposer;
  if (s == "retriever") return AgentRole::Retriever;
  if (s == "verifier") return AgentRole::Verifier;
  if (s == "assembler") return AgentRole::Assembler;
  if (s == "supervisor") return AgentRole::Supervisor;
  if (s == "controller") return AgentRole::Controller;
  raise(Err::ParseError, "unknown agent role '" + std::string(s) + "'");
}

ScriptedBackend ScriptedBackend::from_json(const json& script) {
  ScriptedBackend b;
  if (!script.is_object())
    raise(Err::ParseError, "script must be an object keyed by role");
  for (const auto& [role_key, entries] : script.items()) {
    role_from(role_key);  // validates
    if (!entries.is_object())
      raise(Err::ParseError, "script." + role_key + " must map keys to replies");
    for (const auto& [key, value] : entries.items())
      b.table_[role_key + std::string("\x1f") + key] = value;
  }
  return b;
}

bool ScriptedBackend::has(AgentRole role, const std::string& key) const {
  return table_.count(std::string(role_name(role)) + "\x1f" + key) > 0;
}

std::string ScriptedBackend::complete(const BackendRequest& req) {
  std::lock_guard<std::mutex> lock(*mu_);
  const std::string k = std::string(role_name(req.role)) + "\x1f" + req.key;
  auto it = table_.find(k);
  if (it == table_.end())
    raise(Err::SchemaViolation, "no scripted reply for (" +
                                    std::string(role_name(req.role)) + ", \"" +
                                    req.key + "\")");
  const json& value = it->second;
  const json* reply = &value;
  if (value.is_array()) {
    if (value.empty())
      raise(Err::SchemaViolation, "empty scripted reply list for " + req.key);
    std::size_t& cur = cursor_[k];
    const std::size_t pick = std::min(cur, value.size() - 1);
    ++cur;
    reply = &value[pick];
  }
  if (reply->is_string()) return reply->get<std::string>();
  return reply->dump();
}

HttpBackend::HttpBackend(std::string endpoint_url, std::string model,
                         int timeout_seconds)
    : model_(std::move(model)), timeout_seconds_(timeout_seconds) {
  // Split scheme://host[:port] from the path.
  const auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos)
    raise(Err::ConfigError, "endpoint must include scheme: " + endpoint_url);
  const auto path_start = endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = endpoint_url;
    path_ = "/v1/chat/completions";
  } else {
    scheme_host_ = endpoint_url.substr(0, path_start);
    path_ = endpoint_url.substr(path_start);
  }
}

std::string HttpBackend::role_prompt(AgentRole role) {
  // Each role replies with JSON only, in its fixed schema. The fact pattern
  // keeps downstream parsing deterministic.
  static const char* kFactPattern =
      "Facts use the exact pattern 'subject | predicate | object | "
      "positive-or-negative | confidence | supporting-document-id'.";
  switch (role) {
    case AgentRole::Decomposer:
      return std::string(
          "You split a complex question into the smallest set of sub-questions "
          "that can each be answered from retrieved passages. Reply with JSON "
          "only: {\"sub_questions\": [\"...\"], \"decomposition_reasoning\": "
          "\"...\"}.");
    case AgentRole::Retriever:
      return std::string(
          "You select the passages most relevant to a sub-question. Reply with "
          "JSON only: {\"retrieved_evidence\": [{\"source\": \"...\", "
          "\"content\": \"...\", \"confidence\": 0.0}], "
          "\"retrieval_reasoning\": \"...\"}.");
    case AgentRole::Verifier:
      return std::string(
          "You turn retrieved passages into checkable facts and flag "
          "contradictions. ") + kFactPattern + std::string(
          " Reply with JSON only: {\"verified_facts\": [\"...\"], "
          "\"conflicts_detected\": [\"...\"], \"local_backtracking_action\": "
          "\"none\"}.");
    case AgentRole::Assembler:
      return std::string(
          "You combine partial answers into one final answer, or flag an "
          "escalation when they disagree. Reply with JSON only: "
          "{\"final_answer\": \"...\", \"partial_answer_synthesis\": "
          "[\"...\"], \"escalation_signal\": \"none\"}.");
    case AgentRole::Supervisor:
      return std::string(
          "You resolve conflicts that span agents by naming the statements to "
          "drop and the checkpoint to restore. Reply with JSON only: "
          "{\"conflict_summary\": [\"...\"], \"global_backtracking_decision\": "
          "\"none\", \"updated_consensus_state\": [\"...\"], "
          "\"reasoning_notes\": \"...\"}.");
    case AgentRole::Controller:
      return std::string(
          "You intervene when conflicts keep recurring: challenge or override "
          "a specific assertion, or escalate. Reply with JSON only: "
          "{\"intervention_type\": \"challenge | override | escalate | "
          "none\", \"target_of_intervention\": \"...\", \"rationale\": "
          "\"...\", \"meta_notes\": \"...\"}.");
  }
  return {};
}

std::string HttpBackend::complete(const BackendRequest& req) {
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  httplib::Headers headers;
  if (const char* key = std::getenv("REAGENT_API_KEY"))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string user = req.body.empty() ? req.key : req.body;
  if (!req.repair_note.empty()) user += "\n\n" + req.repair_note;
  const json payload{
      {"model", model_},
      {"messages",
       json::array({json{{"role", "system"}, {"content", role_prompt(req.role)}},
                    json{{"role", "user"}, {"content", user}}})},
      {"temperature", req.temperature}};

  auto res = client.Post(path_, headers, payload.dump(), "application/json");
  if (!res)
    raise(Err::BackendFailure,
          "no response from " + scheme_host_ + path_ + " (" +
              httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    raise(Err::BackendFailure, "HTTP " + std::to_string(res->status) +
                                   " from " + scheme_host_ + path_);
  try {
    const json body = json::parse(res->body);
    return body.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception& e) {
    raise(Err::BackendFailure,
          std::string("malformed completion response: ") + e.what());
  }
}

BackendResult invoke_backend(
    Backend& backend, AgentRole role, const std::string& key,
    const std::string& body, double temperature,
    const std::function<void(const json&)>& validate) {
  constexpr int kMaxAttempts = 3;  // one call plus two repairs
  BackendRequest req;
  req.role = role;
  req.key = key;
  req.body = body;
  req.temperature = temperature;
  std::string last_error;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    req.repair_note =
        attempt == 1 ? std::string{}
                     : "Your previous reply was rejected: " + last_error +
                           ". Reply again with valid JSON matching the schema.";
    const std::string raw = backend.complete(req);
    json parsed;
    try {
      parsed = json::parse(raw);
    } catch (const json::exception& e) {
      last_error = std::string("invalid JSON (") + e.what() + ")";
      continue;
    }
    try {
      if (validate) validate(parsed);
    } catch (const Error& e) {
      if (e.code() != Err::SchemaViolation) throw;
      last_error = e.what();
      continue;
    }
    return BackendResult{std::move(parsed), attempt};
  }
  raise(Err::SchemaViolation, std::string(role_name(role)) + " reply for \"" +
                                  key + "\" failed after " +
                                  std::to_string(kMaxAttempts) +
                                  " attempts: " + last_error);
}

}  // namespace reagent
