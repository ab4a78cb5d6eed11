#pragma once

// Market-facing wrappers tying the generic learning loops to simulated
// trading sessions.

#include "mktsim/episode.hpp"
#include "mktsim/transfer.hpp"

namespace mktsim::transfer {

inline constexpr int kHoldFallback = static_cast<int>(TraderAction::hold);

// Reuse gain of `past` on `cfg`: K pi-reuse episodes from a zero Q-table.
inline double reuse_gain_market(const rl::Policy& past, const ScenarioConfig& cfg,
                                int episodes, std::uint64_t seed,
                                const rl::LearningParams& params = {},
                                PiReuseParams pi_params = {}) {
  rl::TabularLearner learner = make_trading_learner(params, mix_seed(seed, 0xB2));
  MarketEpisodeRunner runner(cfg, seed);
  return reuse_gain(past, runner, episodes, learner, pi_params, kHoldFallback);
}

struct MarketPrqResult {
  PrqResult prq;
  rl::TabularLearner learner;
};

inline MarketPrqResult prq_learn_market(std::span<const rl::Policy> library,
                                        const ScenarioConfig& cfg, int episodes,
                                        std::uint64_t seed,
                                        const rl::LearningParams& params = {},
                                        const PrqParams& prq_params = {}) {
  MarketPrqResult result{PrqResult{}, make_trading_learner(params, mix_seed(seed, 0xC3))};
  MarketEpisodeRunner runner(cfg, seed);
  result.prq = prq_learn(library, runner, episodes, result.learner, prq_params,
                         make_rng(seed, 0xD4), kHoldFallback);
  return result;
}

}  // namespace mktsim::transfer
