#pragma once

#include <cstdint>
#include <map>
#include <queue>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mktsim/order_book.hpp"
#include "mktsim/random.hpp"
#include "mktsim/types.hpp"

namespace mktsim {

class Kernel;

// Message payloads exchanged between agents and the exchange.
struct OrderSubmission {
  Order order;
};
struct CancelRequest {
  OrderId order_id;
};
struct OrderAccepted {
  OrderId order_id;
};
struct OrderRejected {
  OrderId order_id;
  Reject reason;
};
struct TradeNotification {
  OrderId order_id;  // the recipient's order
  Ticks price;
  Quantity quantity;
  bool is_buy;  // direction of the recipient's fill
};
struct SnapshotRequest {};
struct MarketDataSnapshot {
  QuoteSnapshot snapshot;
};
struct Wakeup {
  int tag{0};
};

using Payload = std::variant<OrderSubmission, CancelRequest, OrderAccepted, OrderRejected,
                             TradeNotification, SnapshotRequest, MarketDataSnapshot, Wakeup>;

struct Event {
  TimeNs delivery_time{0};
  std::uint64_t seq{0};  // scheduling order, breaks delivery-time ties
  AgentId sender{0};
  AgentId recipient{0};
  Payload payload;
};

class Agent {
 public:
  explicit Agent(AgentId id) : id_(id) {}
  virtual ~Agent() = default;

  // Called once before the event loop starts; schedule initial wakeups here.
  virtual void on_start(Kernel&) {}
  virtual void receive(Kernel& kernel, const Event& event) = 0;

  AgentId id() const { return id_; }

 private:
  AgentId id_;
};

// Deterministic discrete-event kernel. Single-threaded: agents are invoked
// synchronously in (delivery_time, seq) order, which is total given identical
// scheduling histories.
class Kernel {
 public:
  Kernel(TimeNs market_open, TimeNs market_close, std::uint64_t seed,
         TimeNs latency = microseconds(1))
      : now_(market_open), open_(market_open), close_(market_close), seed_(seed),
        latency_(latency) {}

  void add_agent(Agent* agent) { agents_[agent->id()] = agent; }

  TimeNs now() const { return now_; }
  TimeNs market_open() const { return open_; }
  TimeNs market_close() const { return close_; }
  TimeNs latency() const { return latency_; }
  bool after_close(TimeNs t) const { return t > close_; }
  std::uint64_t seed() const { return seed_; }

  // Independent generator stream; adding streams never perturbs others.
  std::mt19937_64 stream(std::uint64_t stream_id) const { return make_rng(seed_, stream_id); }

  OrderId next_order_id() { return next_order_id_++; }

  // Scheduling into the past is a simulation bug, not a recoverable error.
  void schedule(TimeNs delivery_time, AgentId sender, AgentId recipient, Payload payload) {
    if (delivery_time < now_)
      throw std::logic_error("kernel: event scheduled before the current time");
    queue_.push(Event{delivery_time, next_seq_++, sender, recipient, std::move(payload)});
  }

  // Agent-to-agent message with the constant network latency applied.
  void send(AgentId sender, AgentId recipient, Payload payload) {
    schedule(now_ + latency_, sender, recipient, std::move(payload));
  }

  void run() {
    for (auto& [id, agent] : agents_) agent->on_start(*this);
    while (!queue_.empty()) {
      Event event = queue_.top();
      queue_.pop();
      now_ = event.delivery_time;
      auto it = agents_.find(event.recipient);
      if (it == agents_.end())
        throw std::logic_error("kernel: event addressed to unknown agent");
      it->second->receive(*this, event);
      ++events_processed_;
    }
  }

  std::uint64_t events_processed() const { return events_processed_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.delivery_time != b.delivery_time) return a.delivery_time > b.delivery_time;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::map<AgentId, Agent*> agents_;
  TimeNs now_;
  TimeNs open_;
  TimeNs close_;
  std::uint64_t seed_;
  TimeNs latency_;
  std::uint64_t next_seq_{1};
  OrderId next_order_id_{1};
  std::uint64_t events_processed_{0};
};

}  // namespace mktsim
