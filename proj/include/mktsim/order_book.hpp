#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mktsim/types.hpp"

namespace mktsim {

struct Order {
  OrderId id{0};
  AgentId agent{0};
  Side side{Side::buy};
  OrderKind kind{OrderKind::limit};
  std::optional<Ticks> price{};  // present iff kind == limit
  Quantity quantity{0};
  std::uint64_t arrival_seq{0};  // assigned by the book on receipt
};

inline Order limit_order(OrderId id, AgentId agent, Side side, Ticks price, Quantity qty) {
  return Order{id, agent, side, OrderKind::limit, price, qty, 0};
}

inline Order market_order(OrderId id, AgentId agent, Side side, Quantity qty) {
  return Order{id, agent, side, OrderKind::market, std::nullopt, qty, 0};
}

// Fill record. Price is always the resting order's limit price.
struct Trade {
  OrderId aggressor_id{0};
  OrderId resting_id{0};
  AgentId aggressor_agent{0};
  AgentId resting_agent{0};
  Ticks price{0};
  Quantity quantity{0};
  TimeNs time{0};
};

struct QuoteSnapshot {
  TimeNs time{0};
  std::optional<Ticks> best_bid{};
  std::optional<Ticks> best_ask{};
  Quantity bid_volume{0};
  Quantity ask_volume{0};

  // Exact half-integer; never rounded to the tick grid.
  std::optional<double> mid() const {
    if (!best_bid || !best_ask) return std::nullopt;
    return static_cast<double>(*best_bid + *best_ask) / 2.0;
  }
};

enum class Reject : std::uint8_t {
  bad_quantity,    // quantity < 1
  bad_price,       // limit without a price >= 1 tick, or market carrying a price
  duplicate_id,    // order id already accepted earlier
  unknown_order,   // cancel target not resident
};

struct SubmitResult {
  std::optional<Reject> reject{};
  std::vector<Trade> trades{};
  Quantity resting_quantity{0};  // remainder left on the book (limit orders only)

  bool accepted() const { return !reject.has_value(); }
};

// Price-then-FIFO limit order book.
//
// Market orders sweep the opposite side best price first until filled or the
// side empties; any unfilled remainder is discarded. Limit orders cross the
// same way and rest the remainder at the limit price. Trades execute at the
// resting order's price. Agents may trade against their own resting orders.
class OrderBook {
 public:
  explicit OrderBook(Ticks tick_size = 1) : tick_size_(tick_size) {}

  SubmitResult submit(Order order, TimeNs time) {
    SubmitResult result;
    if (order.quantity < 1) {
      result.reject = Reject::bad_quantity;
      return result;
    }
    if (order.kind == OrderKind::limit && (!order.price || *order.price < 1)) {
      result.reject = Reject::bad_price;
      return result;
    }
    if (order.kind == OrderKind::market && order.price) {
      result.reject = Reject::bad_price;
      return result;
    }
    if (!seen_ids_.insert(order.id).second) {
      result.reject = Reject::duplicate_id;
      return result;
    }
    order.arrival_seq = next_seq_++;

    if (order.side == Side::buy) {
      match_against(asks_, ask_volume_, order, time, result.trades);
    } else {
      match_against(bids_, bid_volume_, order, time, result.trades);
    }

    if (order.quantity > 0 && order.kind == OrderKind::limit) {
      rest(order);
      result.resting_quantity = order.quantity;
    }
    return result;
  }

  // Removes a resting order; unknown ids are a no-op returning false.
  bool cancel(OrderId id) {
    auto it = resting_.find(id);
    if (it == resting_.end()) return false;
    const auto [side, price] = it->second;
    if (side == Side::buy) {
      erase_from_level(bids_, bid_volume_, price, id);
    } else {
      erase_from_level(asks_, ask_volume_, price, id);
    }
    resting_.erase(it);
    return true;
  }

  std::optional<Ticks> best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.begin()->first;
  }

  std::optional<Ticks> best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.begin()->first;
  }

  std::optional<double> mid_price() const {
    if (bids_.empty() || asks_.empty()) return std::nullopt;
    return static_cast<double>(bids_.begin()->first + asks_.begin()->first) / 2.0;
  }

  Quantity bid_volume() const { return bid_volume_; }
  Quantity ask_volume() const { return ask_volume_; }
  Ticks tick_size() const { return tick_size_; }
  std::size_t resting_count() const { return resting_.size(); }

  QuoteSnapshot snapshot(TimeNs time) const {
    return QuoteSnapshot{time, best_bid(), best_ask(), bid_volume_, ask_volume_};
  }

  // Visits resting orders side by side, best price first, FIFO inside a level.
  void visit(const std::function<void(Side, Ticks, const Order&)>& fn) const {
    for (const auto& [price, level] : bids_)
      for (const Order& o : level) fn(Side::buy, price, o);
    for (const auto& [price, level] : asks_)
      for (const Order& o : level) fn(Side::sell, price, o);
  }

 private:
  using BidLevels = std::map<Ticks, std::deque<Order>, std::greater<Ticks>>;
  using AskLevels = std::map<Ticks, std::deque<Order>>;

  template <typename Levels>
  void match_against(Levels& levels, Quantity& side_volume, Order& incoming, TimeNs time,
                     std::vector<Trade>& trades) {
    while (incoming.quantity > 0 && !levels.empty()) {
      auto level_it = levels.begin();
      const Ticks level_price = level_it->first;
      if (incoming.kind == OrderKind::limit) {
        const bool crosses = incoming.side == Side::buy ? level_price <= *incoming.price
                                                        : level_price >= *incoming.price;
        if (!crosses) break;
      }
      auto& queue = level_it->second;
      while (incoming.quantity > 0 && !queue.empty()) {
        Order& resting = queue.front();
        const Quantity fill = std::min(incoming.quantity, resting.quantity);
        trades.push_back(Trade{incoming.id, resting.id, incoming.agent, resting.agent,
                               level_price, fill, time});
        incoming.quantity -= fill;
        resting.quantity -= fill;
        side_volume -= fill;
        if (resting.quantity == 0) {
          resting_.erase(resting.id);
          queue.pop_front();
        }
      }
      if (queue.empty()) levels.erase(level_it);
    }
  }

  void rest(const Order& order) {
    const Ticks price = *order.price;
    if (order.side == Side::buy) {
      bids_[price].push_back(order);
      bid_volume_ += order.quantity;
    } else {
      asks_[price].push_back(order);
      ask_volume_ += order.quantity;
    }
    resting_.emplace(order.id, std::pair{order.side, price});
  }

  template <typename Levels>
  void erase_from_level(Levels& levels, Quantity& side_volume, Ticks price, OrderId id) {
    auto level_it = levels.find(price);
    auto& queue = level_it->second;
    for (auto it = queue.begin(); it != queue.end(); ++it) {
      if (it->id == id) {
        side_volume -= it->quantity;
        queue.erase(it);
        break;
      }
    }
    if (queue.empty()) levels.erase(level_it);
  }

  BidLevels bids_;
  AskLevels asks_;
  std::unordered_map<OrderId, std::pair<Side, Ticks>> resting_;
  std::unordered_set<OrderId> seen_ids_;
  std::uint64_t next_seq_{1};
  Quantity bid_volume_{0};
  Quantity ask_volume_{0};
  Ticks tick_size_;
};

}  // namespace mktsim
