#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mktsim/fundamental.hpp"
#include "mktsim/kernel.hpp"
#include "mktsim/order_book.hpp"
#include "mktsim/rl.hpp"
#include "mktsim/scenario.hpp"
#include "mktsim/trader_state.hpp"

namespace mktsim {

// Fixed agent-id blocks keep generator streams stable when a scenario adds
// agents of another type.
inline constexpr AgentId kExchangeId = 0;
inline constexpr AgentId kZiBaseId = 100;
inline constexpr AgentId kMomentumBaseId = 300;
inline constexpr AgentId kNoiseBaseId = 400;
inline constexpr AgentId kLearnerId = 500;

struct TradeRow {
  TimeNs time;
  Ticks price;
  Quantity quantity;
};

struct QuoteRow {
  TimeNs time;
  std::optional<Ticks> bid;
  std::optional<Ticks> ask;
  Quantity bid_volume;
  Quantity ask_volume;
};

struct LoggedExperience {
  int step;
  ExperienceTuple tuple;
};

struct EpisodeRecord {
  std::vector<TradeRow> trades;
  std::vector<QuoteRow> quotes;
  std::vector<LoggedExperience> tuples;
  std::vector<double> step_rewards;
  double episode_reward{0.0};
  std::uint64_t events_processed{0};
};

// Lists one security against a price-then-FIFO book. Applies submissions and
// cancels, acknowledges them, notifies both fill parties, answers snapshot
// requests, publishes periodic snapshots to subscribers, and samples the
// quote tape on a fixed grid. Post-close payloads are ignored.
class ExchangeAgent : public Agent {
 public:
  ExchangeAgent(Ticks tick_size, TimeNs quote_sample_interval, EpisodeRecord* record)
      : Agent(kExchangeId), book_(tick_size), sample_interval_(quote_sample_interval),
        record_(record) {}

  // interval must be positive; first snapshot goes out one interval after open.
  void subscribe(AgentId agent, TimeNs interval) { subscribers_.push_back({agent, interval}); }

  OrderBook& book() { return book_; }

  void on_start(Kernel& kernel) override {
    kernel.schedule(kernel.market_open(), id(), id(), Wakeup{kTapeTag});
    for (std::size_t i = 0; i < subscribers_.size(); ++i) {
      const TimeNs first = kernel.market_open() + subscribers_[i].interval;
      if (first <= kernel.market_close())
        kernel.schedule(first, id(), id(), Wakeup{kSubscriberTagBase + static_cast<int>(i)});
    }
  }

  void receive(Kernel& kernel, const Event& event) override {
    if (kernel.after_close(event.delivery_time)) return;
    std::visit(
        [&](const auto& payload) { handle(kernel, event.sender, payload); },
        event.payload);
  }

 private:
  static constexpr int kTapeTag = 0;
  static constexpr int kSubscriberTagBase = 1;

  struct Subscription {
    AgentId agent;
    TimeNs interval;
  };

  void handle(Kernel& kernel, AgentId sender, const OrderSubmission& msg) {
    SubmitResult result = book_.submit(msg.order, kernel.now());
    if (!result.accepted()) {
      kernel.send(id(), sender, OrderRejected{msg.order.id, *result.reject});
      return;
    }
    kernel.send(id(), sender, OrderAccepted{msg.order.id});
    for (const Trade& t : result.trades) {
      if (record_) record_->trades.push_back(TradeRow{t.time, t.price, t.quantity});
      const bool aggressor_buys = msg.order.side == Side::buy;
      kernel.send(id(), t.aggressor_agent,
                  TradeNotification{t.aggressor_id, t.price, t.quantity, aggressor_buys});
      kernel.send(id(), t.resting_agent,
                  TradeNotification{t.resting_id, t.price, t.quantity, !aggressor_buys});
    }
  }

  void handle(Kernel& kernel, AgentId sender, const CancelRequest& msg) {
    if (!book_.cancel(msg.order_id))
      kernel.send(id(), sender, OrderRejected{msg.order_id, Reject::unknown_order});
  }

  void handle(Kernel& kernel, AgentId sender, const SnapshotRequest&) {
    kernel.send(id(), sender, MarketDataSnapshot{book_.snapshot(kernel.now())});
  }

  void handle(Kernel& kernel, AgentId, const Wakeup& wake) {
    if (wake.tag == kTapeTag) {
      if (record_) {
        const QuoteSnapshot s = book_.snapshot(kernel.now());
        record_->quotes.push_back(
            QuoteRow{s.time, s.best_bid, s.best_ask, s.bid_volume, s.ask_volume});
      }
      const TimeNs next = kernel.now() + sample_interval_;
      if (next <= kernel.market_close()) kernel.schedule(next, id(), id(), Wakeup{kTapeTag});
      return;
    }
    const std::size_t idx = static_cast<std::size_t>(wake.tag - kSubscriberTagBase);
    const Subscription& sub = subscribers_[idx];
    kernel.send(id(), sub.agent, MarketDataSnapshot{book_.snapshot(kernel.now())});
    const TimeNs next = kernel.now() + sub.interval;
    if (next <= kernel.market_close()) kernel.schedule(next, id(), id(), Wakeup{wake.tag});
  }

  void handle(Kernel&, AgentId, const OrderAccepted&) {}
  void handle(Kernel&, AgentId, const OrderRejected&) {}
  void handle(Kernel&, AgentId, const TradeNotification&) {}
  void handle(Kernel&, AgentId, const MarketDataSnapshot&) {}

  OrderBook book_;
  TimeNs sample_interval_;
  EpisodeRecord* record_;
  std::vector<Subscription> subscribers_;
};

// Price a zero-intelligence agent quotes given its noisy valuation: buys sit
// below the valuation by the offset, sells above. Floored at one tick.
inline Ticks zi_quote_price(Ticks valuation, Ticks offset, Side side) {
  const Ticks price = side == Side::buy ? valuation - offset : valuation + offset;
  return std::max<Ticks>(1, price);
}

// Liquidity provider quoting around a noisy observation of the mean-reverting
// fundamental. Keeps at most one resting order: each wakeup cancels the prior
// order, places a fresh unit-size limit on a random side, and draws the next
// wakeup from an exponential inter-arrival time.
class ZiAgent : public Agent {
 public:
  ZiAgent(AgentId id, const ZiParams& params, const FundamentalSeries* fundamental)
      : Agent(id), params_(params), fundamental_(fundamental) {}

  void on_start(Kernel& kernel) override {
    rng_ = kernel.stream(static_cast<std::uint64_t>(id()));
    schedule_next_wakeup(kernel, kernel.market_open());
  }

  void receive(Kernel& kernel, const Event& event) override {
    if (kernel.after_close(event.delivery_time)) return;
    if (!std::holds_alternative<Wakeup>(event.payload)) return;

    if (outstanding_) {
      kernel.send(id(), kExchangeId, CancelRequest{*outstanding_});
      outstanding_.reset();
    }

    std::normal_distribution<double> noise(0.0, params_.obs_noise_std);
    const double observation = params_.obs_noise_std > 0.0 ? noise(rng_) : 0.0;
    const Ticks valuation =
        std::max<Ticks>(1, std::llround(static_cast<double>(fundamental_->at(kernel.now())) +
                                        observation));
    std::uniform_int_distribution<int> coin(0, 1);
    const Side side = coin(rng_) == 0 ? Side::buy : Side::sell;
    std::uniform_int_distribution<Ticks> offset(params_.offset_min, params_.offset_max);
    const Ticks price = zi_quote_price(valuation, offset(rng_), side);

    const OrderId oid = kernel.next_order_id();
    kernel.send(id(), kExchangeId,
                OrderSubmission{limit_order(oid, id(), side, price, params_.order_size)});
    outstanding_ = oid;

    schedule_next_wakeup(kernel, kernel.now());
  }

 private:
  void schedule_next_wakeup(Kernel& kernel, TimeNs from) {
    std::exponential_distribution<double> gap(1.0 /
                                              static_cast<double>(params_.mean_interarrival));
    const TimeNs next = from + std::max<TimeNs>(1, std::llround(gap(rng_)));
    if (next <= kernel.market_close()) kernel.schedule(next, id(), id(), Wakeup{});
  }

  ZiParams params_;
  const FundamentalSeries* fundamental_;
  std::mt19937_64 rng_;
  std::optional<OrderId> outstanding_;
};

// Trading side a momentum agent takes: buy when the short window mean exceeds
// the long one, sell otherwise. No opinion before 50 observations.
inline std::optional<Side> momentum_side(std::span<const double> mids) {
  if (mids.size() < 50) return std::nullopt;
  double sum20 = 0.0, sum50 = 0.0;
  const std::size_t n = mids.size();
  for (std::size_t i = n - 20; i < n; ++i) sum20 += mids[i];
  for (std::size_t i = n - 50; i < n; ++i) sum50 += mids[i];
  return (sum20 / 20.0) > (sum50 / 50.0) ? Side::buy : Side::sell;
}

// Trend chaser: subscribes to periodic snapshots, compares the mean of the
// last 20 mid observations with the last 50, and joins the touch on its side
// with a random-size limit order. Orders are left to rest; there is no
// cancel/replace cycle.
class MomentumAgent : public Agent {
 public:
  MomentumAgent(AgentId id, const MomentumParams& params) : Agent(id), params_(params) {}

  void on_start(Kernel& kernel) override {
    rng_ = kernel.stream(static_cast<std::uint64_t>(id()));
  }

  void receive(Kernel& kernel, const Event& event) override {
    if (kernel.after_close(event.delivery_time)) return;
    const auto* data = std::get_if<MarketDataSnapshot>(&event.payload);
    if (!data) return;

    const auto mid = data->snapshot.mid();
    if (mid) mids_.push_back(*mid);

    const auto side = momentum_side(mids_);
    if (!side) return;
    const std::optional<Ticks> touch =
        *side == Side::buy ? data->snapshot.best_bid : data->snapshot.best_ask;
    if (!touch) return;

    std::uniform_int_distribution<Quantity> size(params_.size_min, params_.size_max);
    kernel.send(id(), kExchangeId,
                OrderSubmission{limit_order(kernel.next_order_id(), id(), *side, *touch,
                                            size(rng_))});
  }

 private:
  MomentumParams params_;
  std::mt19937_64 rng_;
  std::vector<double> mids_;
};

// Retail-style agent: one market order per session at a pre-drawn uniform
// time, fair-coin side, uniform size.
class NoiseAgent : public Agent {
 public:
  NoiseAgent(AgentId id, const NoiseParams& params) : Agent(id), params_(params) {}

  void on_start(Kernel& kernel) override {
    rng_ = kernel.stream(static_cast<std::uint64_t>(id()));
    std::uniform_int_distribution<TimeNs> when(kernel.market_open(), kernel.market_close());
    kernel.schedule(when(rng_), id(), id(), Wakeup{});
  }

  void receive(Kernel& kernel, const Event& event) override {
    if (kernel.after_close(event.delivery_time)) return;
    if (!std::holds_alternative<Wakeup>(event.payload)) return;
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<Quantity> size(params_.size_min, params_.size_max);
    const Side side = coin(rng_) == 0 ? Side::buy : Side::sell;
    kernel.send(id(), kExchangeId,
                OrderSubmission{market_order(kernel.next_order_id(), id(), side, size(rng_))});
  }

 private:
  NoiseParams params_;
  std::mt19937_64 rng_;
};

// Reinforcement-learning trader. Receives periodic snapshots; on each one it
// closes out the previous decision step (mark-to-market reward in ticks, one
// experience tuple, one hook update) and, when another snapshot is still due
// before the close, asks the hook for the next action and executes it as a
// unit market order. Inventory is kept in {-1, 0, +1} by the legality mask.
class LearnerAgent : public Agent {
 public:
  LearnerAgent(const LearnerParams& params, Ticks initial_mark, rl::DecisionHook* hook,
               EpisodeRecord* record)
      : Agent(kLearnerId), params_(params), mark_price_(static_cast<double>(initial_mark)),
        hook_(hook), record_(record) {}

  void receive(Kernel& kernel, const Event& event) override {
    if (kernel.after_close(event.delivery_time)) return;
    if (const auto* fill = std::get_if<TradeNotification>(&event.payload)) {
      on_fill(*fill);
      return;
    }
    const auto* data = std::get_if<MarketDataSnapshot>(&event.payload);
    if (!data) return;
    on_snapshot(kernel, data->snapshot);
  }

  PositionState position() const { return position_; }
  double cash() const { return cash_; }

 private:
  void on_fill(const TradeNotification& fill) {
    const double value = static_cast<double>(fill.price) * static_cast<double>(fill.quantity);
    if (fill.is_buy) {
      cash_ -= value;
      position_ = next_position(position_, +1);
    } else {
      cash_ += value;
      position_ = next_position(position_, -1);
    }
  }

  static PositionState next_position(PositionState p, int delta) {
    const int raw = static_cast<int>(p) + delta;
    return static_cast<PositionState>(std::clamp(raw, 0, 2));
  }

  void on_snapshot(Kernel& kernel, const QuoteSnapshot& snap) {
    if (const auto mid = snap.mid()) mark_price_ = *mid;
    const double wealth =
        cash_ + static_cast<double>(static_cast<int>(position_) - 1) * mark_price_;
    const TraderState state = observe_state(snap.bid_volume, snap.ask_volume, position_);

    if (pending_) {
      const double reward = wealth - pending_->wealth;
      const ExperienceTuple tuple{pending_->state, pending_->action, reward, state};
      if (record_) {
        record_->tuples.push_back(LoggedExperience{step_, tuple});
        record_->step_rewards.push_back(reward);
        record_->episode_reward += reward;
      }
      if (hook_)
        hook_->observe(rl::StepTuple{state_index(tuple.state),
                                     static_cast<int>(tuple.action), reward,
                                     state_index(tuple.next_state)});
      ++step_;
      pending_.reset();
    }

    // Only decide when the closing snapshot will still arrive inside the
    // session (publish plus one latency hop), so every decision gets a
    // closing observation and the tuple log length equals the decision count.
    if (snap.time + params_.decision_interval + kernel.latency() > kernel.market_close())
      return;
    if (!hook_) return;

    const TraderAction action = static_cast<TraderAction>(hook_->decide(state_index(state)));
    if (action != TraderAction::hold) {
      const Side side = action == TraderAction::buy ? Side::buy : Side::sell;
      kernel.send(id(), kExchangeId,
                  OrderSubmission{market_order(kernel.next_order_id(), id(), side,
                                               params_.order_size)});
    }
    pending_ = PendingDecision{state, action, wealth};
  }

  struct PendingDecision {
    TraderState state;
    TraderAction action;
    double wealth;
  };

  LearnerParams params_;
  double mark_price_;
  rl::DecisionHook* hook_;
  EpisodeRecord* record_;
  double cash_{0.0};
  PositionState position_{PositionState::flat};
  std::optional<PendingDecision> pending_;
  int step_{0};
};

}  // namespace mktsim
