#include "reagent/bus.hpp"

#include <algorithm>

namespace reagent {

const char* message_kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::Assert: return "assert";
    case MessageKind::Inform: return "inform";
    case MessageKind::Reject: return "reject";
    case MessageKind::Challenge: return "challenge";
  }
  return "unknown";
}

MessageKind message_kind_from(std::string_view s) {
  if (s == "assert") return MessageKind::Assert;
  if (s == "inform") return MessageKind::Inform;
  if (s == "reject") return MessageKind::Reject;
  if (s == "challenge") return MessageKind::Challenge;
  raise(Err::ParseError, "unknown message kind '" + std::string(s) + "'");
}

json Message::to_json() const {
  json j{{"id", id},
         {"sender", sender},
         {"kind", message_kind_name(kind)},
         {"payload", payload},
         {"logical_time", logical_time}};
  if (broadcast)
    j["recipients"] = "BROADCAST";
  else
    j["recipients"] = recipients;
  return j;
}

Message Message::from_json(const json& j) {
  Message m;
  try {
    m.id = j.at("id").get<std::string>();
    m.sender = j.at("sender").get<std::string>();
    m.kind = message_kind_from(j.at("kind").get<std::string>());
    m.payload = j.at("payload");
    m.logical_time = j.at("logical_time").get<std::int64_t>();
    const json& rec = j.at("recipients");
    if (rec.is_string() && rec.get<std::string>() == "BROADCAST") {
      m.broadcast = true;
    } else {
      m.broadcast = false;
      m.recipients = rec.get<std::vector<std::string>>();
    }
  } catch (const json::exception& ex) {
    raise(Err::ParseError, std::string("bad message: ") + ex.what());
  }
  return m;
}

json CompositeEvent::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back(m.to_json());
  json flags = json::array();
  for (const auto& [a, b] : flagged_conflicts) flags.push_back({a, b});
  return json{{"time", time}, {"messages", msgs},
              {"flagged_conflicts", flags}};
}

void MessageBus::register_agent(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  agents_.insert(id);
}

bool MessageBus::known(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return agents_.count(id) > 0;
}

std::string MessageBus::send(Message m) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!agents_.count(m.sender))
    raise(Err::UnknownSender, "sender '" + m.sender + "' is not registered");
  if (m.id.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s#%04lld", m.sender.c_str(),
                  static_cast<long long>(per_sender_[m.sender]++));
    m.id = buf;
  }
  if (!seen_ids_.insert(m.id).second)
    raise(Err::InvalidArgument, "message id '" + m.id + "' reused");
  queue_.push_back(std::move(m));
  return queue_.back().id;
}

std::size_t MessageBus::pending() const {
  std::lock_guard<std::mutex> lock(mu_);
  return queue_.size();
}

CompositeEvent MessageBus::deliver_round() {
  std::vector<Message> batch;
  {
    std::lock_guard<std::mutex> lock(mu_);
    batch.swap(queue_);
  }
  CompositeEvent ev;
  ev.time = store_.tick();
  for (auto& m : batch) m.logical_time = ev.time;
  std::sort(batch.begin(), batch.end(), [](const Message& a, const Message& b) {
    if (a.sender != b.sender) return a.sender < b.sender;
    return a.id < b.id;
  });
  ev.messages = std::move(batch);

  // Flag every contradicting pair of concurrent asserts; resolution is the
  // supervisory layer's job, not the bus's.
  std::vector<Assertion> bodies;
  bodies.reserve(ev.messages.size());
  for (const auto& m : ev.messages) {
    if (m.kind != MessageKind::Assert) continue;
    if (!m.payload.is_object() || !m.payload.contains("assertion")) continue;
    try {
      bodies.push_back(Assertion::from_json(m.payload["assertion"]));
    } catch (const Error&) {
      continue;  // non-assertion payloads cannot clash
    }
  }
  std::set<std::pair<std::string, std::string>> flags;
  for (std::size_t i = 0; i < bodies.size(); ++i)
    for (std::size_t j = i + 1; j < bodies.size(); ++j)
      if (contradicts(bodies[i], bodies[j], reg_))
        flags.insert({std::min(bodies[i].id, bodies[j].id),
                      std::max(bodies[i].id, bodies[j].id)});
  ev.flagged_conflicts.assign(flags.begin(), flags.end());

  store_.append_event(EntryKind::Message, "bus", ev.to_json());
  return ev;
}

}  // namespace reagent
