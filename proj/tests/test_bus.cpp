#include <algorithm>
#include <random>

#include "doctest.h"
#include "reagent/bus.hpp"
#include "support/oracles.hpp"

using namespace reagent;

namespace {

PredicateRegistry geo_registry() {
  return PredicateRegistry{{{"capital", true}, {"population", true}}};
}

Message assert_msg(const std::string& id, const std::string& sender,
                   const std::string& aid, const std::string& subj,
                   const std::string& pred, const std::string& obj) {
  Message m;
  m.id = id;
  m.sender = sender;
  m.kind = MessageKind::Assert;
  Assertion a;
  a.id = aid;
  a.subject = subj;
  a.predicate = pred;
  a.object = obj;
  a.confidence = 0.8;
  m.payload = json{{"assertion", a.to_json()}};
  return m;
}

}  // namespace

TEST_CASE("send requires a registered sender") {
  Store store;
  const auto reg = geo_registry();
  MessageBus bus(store, reg);
  bus.register_agent("decomposer");

  Message m;
  m.sender = "decomposer";
  m.kind = MessageKind::Inform;
  m.payload = json{{"note", "hello"}};
  CHECK_NOTHROW(bus.send(m));

  Message bad;
  bad.sender = "stranger";
  bad.payload = json::object();
  try {
    bus.send(bad);
    FAIL("expected UnknownSender");
  } catch (const Error& e) {
    CHECK(e.code() == Err::UnknownSender);
  }
}

TEST_CASE("broadcast sub-questions queue with distinct auto ids") {
  Store store;
  const auto reg = geo_registry();
  MessageBus bus(store, reg);
  bus.register_agent("decomposer");

  Message m1;
  m1.sender = "decomposer";
  m1.kind = MessageKind::Assert;
  m1.payload = json{{"sub_question", "q1"}};
  Message m2 = m1;
  m2.payload = json{{"sub_question", "q2"}};
  const std::string id1 = bus.send(m1);
  const std::string id2 = bus.send(m2);
  CHECK(id1 != id2);
  CHECK(bus.pending() == 2);

  const CompositeEvent ev = bus.deliver_round();
  CHECK(ev.messages.size() == 2);
  CHECK(bus.pending() == 0);
  for (const auto& msg : ev.messages) {
    CHECK(msg.logical_time == ev.time);
    CHECK(msg.broadcast);
  }
}

TEST_CASE("empty round delivers an empty composite event") {
  Store store;
  const auto reg = geo_registry();
  MessageBus bus(store, reg);
  const CompositeEvent ev = bus.deliver_round();
  CHECK(ev.messages.empty());
  CHECK(ev.flagged_conflicts.empty());
  CHECK(store.journal().count(EntryKind::Message) == 1);
}

TEST_CASE("concurrent contradictory asserts are flagged, not resolved") {
  Store store;
  const auto reg = geo_registry();
  MessageBus bus(store, reg);
  bus.register_agent("verifier");
  bus.register_agent("retriever");

  bus.send(assert_msg("m1", "verifier", "a1", "California", "capital",
                      "Sacramento"));
  bus.send(assert_msg("m2", "retriever", "a2", "California", "capital",
                      "Los Angeles"));
  bus.send(assert_msg("m3", "retriever", "a3", "Nevada", "capital",
                      "Carson City"));

  const CompositeEvent ev = bus.deliver_round();
  REQUIRE(ev.flagged_conflicts.size() == 1);
  CHECK(ev.flagged_conflicts[0] == std::pair<std::string, std::string>{"a1",
                                                                       "a2"});
  // nothing was admitted anywhere; the bus only flags
  CHECK(store.base().owners().empty());
}

TEST_CASE("messages serialize with BROADCAST or explicit recipients") {
  Message m;
  m.id = "m1";
  m.sender = "verifier";
  m.kind = MessageKind::Reject;
  m.payload = json{{"why", "stale"}};
  m.logical_time = 4;

  const json b = m.to_json();
  CHECK(b["recipients"] == "BROADCAST");
  CHECK(Message::from_json(b).broadcast);

  m.broadcast = false;
  m.recipients = {"supervisor"};
  const json r = m.to_json();
  CHECK(r["recipients"] == json::array({"supervisor"}));
  const Message round = Message::from_json(r);
  CHECK_FALSE(round.broadcast);
  CHECK(round.recipients == std::vector<std::string>{"supervisor"});
}

TEST_CASE("deliver_round output is submission-order independent") {
  const auto reg = geo_registry();
  std::vector<Message> round;
  round.push_back(assert_msg("m1", "verifier", "a1", "X", "capital", "P"));
  round.push_back(assert_msg("m2", "verifier", "a2", "X", "capital", "Q"));
  round.push_back(assert_msg("m3", "retriever", "a3", "Y", "population", "1"));
  Message inform;
  inform.id = "m4";
  inform.sender = "assembler";
  inform.kind = MessageKind::Inform;
  inform.payload = json{{"note", "partial"}};
  round.push_back(inform);

  std::vector<std::size_t> order = {0, 1, 2, 3};
  json reference;
  std::string reference_journal;
  do {
    Store store;
    MessageBus bus(store, reg);
    for (const auto& a : {"verifier", "retriever", "assembler"})
      bus.register_agent(a);
    for (const auto i : order) bus.send(round[i]);
    const CompositeEvent ev = bus.deliver_round();
    const json got = ev.to_json();
    if (reference.is_null()) {
      reference = got;
      reference_journal = store.journal().to_ndjson();
    } else {
      CHECK(got == reference);
      CHECK(store.journal().to_ndjson() == reference_journal);
    }
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("every sent message appears in exactly one composite event") {
  Store store;
  const auto reg = geo_registry();
  MessageBus bus(store, reg);
  bus.register_agent("verifier");

  std::set<std::string> sent;
  std::mt19937_64 rng(11);
  std::multiset<std::string> delivered;
  for (int round = 0; round < 20; ++round) {
    const int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      Message m;
      m.sender = "verifier";
      m.kind = MessageKind::Inform;
      m.payload = json{{"round", round}, {"i", i}};
      sent.insert(bus.send(m));
    }
    for (const auto& msg : bus.deliver_round().messages)
      delivered.insert(msg.id);
  }
  CHECK(delivered.size() == sent.size());
  for (const auto& id : sent) CHECK(delivered.count(id) == 1);
}

TEST_CASE("flagged conflicts equal the brute-force pair set") {
  oracles::AssertionGen gen(321);
  const PredicateRegistry reg{{{"capital", true}, {"population", true}}};
  for (int round = 0; round < 60; ++round) {
    Store store;
    MessageBus bus(store, reg);
    bus.register_agent("verifier");
    bus.register_agent("retriever");

    const auto pool = gen.pool(8, round % 2 == 0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      Message m;
      m.id = "m" + std::to_string(i);
      m.sender = i % 2 ? "verifier" : "retriever";
      m.kind = MessageKind::Assert;
      m.payload = json{{"assertion", pool[i].to_json()}};
      bus.send(std::move(m));
    }
    const CompositeEvent ev = bus.deliver_round();
    CHECK(ev.flagged_conflicts == oracles::o_conflict_pairs(pool, gen.preds));
  }
}

TEST_CASE("reused message ids are rejected") {
  Store store;
  const auto reg = geo_registry();
  MessageBus bus(store, reg);
  bus.register_agent("verifier");
  bus.send(assert_msg("m1", "verifier", "a1", "X", "capital", "P"));
  CHECK_THROWS_AS(
      bus.send(assert_msg("m1", "verifier", "a2", "X", "capital", "Q")),
      Error);
}
