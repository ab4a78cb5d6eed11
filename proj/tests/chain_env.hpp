#pragma once

// Five-state deterministic chain used as a Q-learning correctness oracle.
// States 0..4, start at 0; action 0 steps left, 1 steps right, 2 stays.
// Entering state 4 pays reward 1 and ends the episode. The exact Q* comes
// from value iteration, computed independently of the learner.

#include <array>
#include <cmath>

#include "mktsim/rl.hpp"

namespace chain {

inline constexpr int kStates = 5;
inline constexpr int kActions = 3;
inline constexpr int kGoal = 4;

inline int transition(int s, int a) {
  if (a == 0) return s > 0 ? s - 1 : 0;
  if (a == 1) return s + 1;
  return s;
}

inline double reward(int, int, int next_s) { return next_s == kGoal ? 1.0 : 0.0; }

// One episode capped at `max_steps`; feeds every transition to the hook.
inline mktsim::rl::EpisodeOutcome run_episode(mktsim::rl::DecisionHook& hook,
                                              int max_steps = 100) {
  mktsim::rl::EpisodeOutcome out;
  int s = 0;
  for (int step = 0; step < max_steps && s != kGoal; ++step) {
    const int a = hook.decide(s);
    const int next_s = transition(s, a);
    const double r = reward(s, a, next_s);
    const mktsim::rl::StepTuple t{s, a, r, next_s};
    hook.observe(t);
    out.tuples.push_back(t);
    out.reward += r;
    s = next_s;
  }
  return out;
}

// Value-iteration oracle. The goal state is absorbing with zero value.
inline std::array<std::array<double, kActions>, kStates> value_iteration(double gamma) {
  std::array<std::array<double, kActions>, kStates> q{};
  for (int iter = 0; iter < 10'000; ++iter) {
    double delta = 0.0;
    auto next_q = q;
    for (int s = 0; s < kStates; ++s) {
      if (s == kGoal) continue;
      for (int a = 0; a < kActions; ++a) {
        const int s2 = transition(s, a);
        double v2 = 0.0;
        if (s2 != kGoal)
          for (int a2 = 0; a2 < kActions; ++a2) v2 = std::max(v2, q[s2][a2]);
        next_q[s][a] = reward(s, a, s2) + gamma * v2;
        delta = std::max(delta, std::abs(next_q[s][a] - q[s][a]));
      }
    }
    q = next_q;
    if (delta < 1e-15) break;
  }
  return q;
}

}  // namespace chain
