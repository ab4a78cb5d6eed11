#pragma once

#include <array>
#include <span>
#include <string>

#include "mktsim/types.hpp"

namespace mktsim {

// Position is capped to one share either way; buy/sell act in unit size.
enum class PositionState : int { owes = 0, flat = 1, owns = 2 };
enum class TraderAction : int { buy = 0, sell = 1, hold = 2 };

inline constexpr int kImbalanceBuckets = 7;
inline constexpr int kPositions = 3;
inline constexpr int kTraderStates = kImbalanceBuckets * kPositions;  // 21
inline constexpr int kTraderActions = 3;

// Signed bucket edges for d = bid_volume - ask_volume. Bucket i covers
// [edge[i-1], edge[i]) with open ends below -100 and from 100 up.
inline constexpr std::array<Quantity, 6> kImbalanceEdges{-100, -30, -5, 5, 30, 100};

constexpr int imbalance_bucket(Quantity d) {
  int bucket = 0;
  for (Quantity edge : kImbalanceEdges)
    if (d >= edge) ++bucket;
  return bucket;
}

struct TraderState {
  int imbalance_bucket{kImbalanceBuckets / 2};
  PositionState position{PositionState::flat};

  bool operator==(const TraderState&) const = default;
};

// Missing volumes count as zero.
constexpr TraderState observe_state(Quantity bid_volume, Quantity ask_volume,
                                    PositionState position) {
  return TraderState{imbalance_bucket(bid_volume - ask_volume), position};
}

constexpr int state_index(const TraderState& s) {
  return s.imbalance_bucket * kPositions + static_cast<int>(s.position);
}

constexpr TraderState state_from_index(int index) {
  return TraderState{index / kPositions, static_cast<PositionState>(index % kPositions)};
}

namespace detail {
inline constexpr std::array<int, 2> kOwesActions{static_cast<int>(TraderAction::buy),
                                                 static_cast<int>(TraderAction::hold)};
inline constexpr std::array<int, 3> kFlatActions{static_cast<int>(TraderAction::buy),
                                                 static_cast<int>(TraderAction::sell),
                                                 static_cast<int>(TraderAction::hold)};
inline constexpr std::array<int, 2> kOwnsActions{static_cast<int>(TraderAction::sell),
                                                 static_cast<int>(TraderAction::hold)};
}  // namespace detail

// Buying is illegal when already long; selling is illegal when already short.
inline std::span<const int> legal_actions(PositionState position) {
  switch (position) {
    case PositionState::owes: return detail::kOwesActions;
    case PositionState::owns: return detail::kOwnsActions;
    case PositionState::flat: break;
  }
  return detail::kFlatActions;
}

inline std::span<const int> legal_actions(const TraderState& s) {
  return legal_actions(s.position);
}

inline std::span<const int> legal_actions_for_state_index(int index) {
  return legal_actions(static_cast<PositionState>(index % kPositions));
}

struct ExperienceTuple {
  TraderState state;
  TraderAction action{TraderAction::hold};
  double reward{0.0};
  TraderState next_state;
};

inline std::string to_string(PositionState p) {
  switch (p) {
    case PositionState::owes: return "owes";
    case PositionState::owns: return "owns";
    case PositionState::flat: break;
  }
  return "flat";
}

inline std::string to_string(TraderAction a) {
  switch (a) {
    case TraderAction::buy: return "buy";
    case TraderAction::sell: return "sell";
    case TraderAction::hold: break;
  }
  return "hold";
}

}  // namespace mktsim
