#pragma once

#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "reagent/journal.hpp"

namespace reagent {

enum class MessageKind { Assert, Inform, Reject, Challenge };

const char* message_kind_name(MessageKind k);
MessageKind message_kind_from(std::string_view s);

/// Typed inter-agent event. An assert payload carries {"assertion": {...}}
/// plus optional routing hints; other kinds carry free-form bodies.
struct Message {
  std::string id;  // auto-assigned "<sender>#<n>" when empty
  std::string sender;
  bool broadcast = true;
  std::vector<std::string> recipients;  // ignored when broadcast
  MessageKind kind = MessageKind::Inform;
  json payload;
  std::int64_t logical_time = -1;  // stamped at delivery

  json to_json() const;
  static Message from_json(const json& j);
};

/// All messages of one round, merged and canonically ordered, with
/// contradicting concurrent assert-pairs flagged for supervisor escalation.
struct CompositeEvent {
  std::int64_t time = 0;
  std::vector<Message> messages;
  std::vector<std::pair<std::string, std::string>> flagged_conflicts;

  json to_json() const;
};

/// In-process bus. send() may be called from several agent workers;
/// deliver_round() is invoked by the engine only, once per round.
class MessageBus {
 public:
  MessageBus(Store& store, const PredicateRegistry& reg)
      : store_(store), reg_(reg) {}

  void register_agent(const std::string& id);
  bool known(const std::string& id) const;

  /// Queues a message for the current round; returns the message id.
  std::string send(Message m);

  std::size_t pending() const;

  /// Merges the queue into one composite event at the next logical time.
  /// Ordering is ascending (sender, id), independent of submission order.
  CompositeEvent deliver_round();

 private:
  Store& store_;
  const PredicateRegistry& reg_;
  std::set<std::string> agents_;
  std::vector<Message> queue_;
  std::set<std::string> seen_ids_;
  std::map<std::string, std::int64_t> per_sender_;
  mutable std::mutex mu_;
};

}  // namespace reagent
