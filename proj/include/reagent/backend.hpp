#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <string>

#include <memory>

#include "json.hpp"
#include "reagent/errors.hpp"

namespace reagent {

using json = nlohmann::json;

enum class AgentRole {
  Decomposer,
  Retriever,
  Verifier,
  Assembler,
  Supervisor,
  Controller,
};

const char* role_name(AgentRole r);
AgentRole role_from(std::string_view s);

/// One completion request. `key` identifies the task (question or
/// sub-question); `body` carries the full task context for prompt-driven
/// backends. Scripted backends look up `key`, HTTP backends prompt with
/// `body`.
struct BackendRequest {
  AgentRole role = AgentRole::Decomposer;
  std::string key;
  std::string body;
  double temperature = 0.6;
  std::string repair_note;  // set on re-prompt attempts
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const BackendRequest& req) = 0;
  virtual const char* name() const = 0;
};

/// Deterministic table backend: role -> key -> canned reply. A reply value
/// may be a string (returned verbatim, possibly malformed on purpose), an
/// object (dumped as JSON) or an array of either (consumed call by call,
/// last value repeating).
class ScriptedBackend : public Backend {
 public:
  static ScriptedBackend from_json(const json& script);

  std::string complete(const BackendRequest& req) override;
  const char* name() const override { return "scripted"; }

  bool has(AgentRole role, const std::string& key) const;

 private:
  std::map<std::string, json> table_;  // "<role>\x1f<key>" -> value
  std::map<std::string, std::size_t> cursor_;
  // parallel retrieval workers share one backend; unique_ptr keeps the type
  // movable
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

/// Chat-completion HTTP backend. Posts {model, messages, temperature} to the
/// configured endpoint and returns the first choice's message content.
/// API key from the REAGENT_API_KEY environment variable.
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string endpoint_url, std::string model,
              int timeout_seconds = 60);

  std::string complete(const BackendRequest& req) override;
  const char* name() const override { return "http"; }

  /// Role prompt preamble sent as the system message.
  static std::string role_prompt(AgentRole role);

 private:
  std::string scheme_host_;
  std::string path_;
  std::string model_;
  int timeout_seconds_;
};

struct BackendResult {
  json value;
  int attempts = 1;
};

/// Calls the backend until the reply parses as JSON and passes `validate`,
/// re-prompting with the parse error up to two repair attempts, then raises
/// SchemaViolation. `validate` throws SchemaViolation to reject a reply.
BackendResult invoke_backend(Backend& backend, AgentRole role,
                             const std::string& key, const std::string& body,
                             double temperature,
                             const std::function<void(const json&)>& validate);

}  // namespace reagent
