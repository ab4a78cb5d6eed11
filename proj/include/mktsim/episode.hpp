#pragma once

#include <memory>
#include <vector>

#include "mktsim/agents.hpp"
#include "mktsim/kernel.hpp"
#include "mktsim/scenario.hpp"

namespace mktsim {

// One trading session is one episode: the kernel runs from market open to
// close and the record holds the trade tape, the quote tape sampled on the
// configured grid, and the learner's experience. Output is bit-identical for
// identical (scenario, seed).
inline EpisodeRecord run_episode(const ScenarioConfig& cfg, std::uint64_t seed,
                                 rl::DecisionHook* learner_hook = nullptr) {
  cfg.validate();

  EpisodeRecord record;
  Kernel kernel(cfg.market_open, cfg.market_close, seed, cfg.latency);

  const TimeNs horizon = cfg.market_close - cfg.market_open;
  const FundamentalSeries fundamental = FundamentalSeries::generate(
      cfg.fundamental, cfg.market_open, horizon, mix_seed(seed, 1));

  std::vector<std::unique_ptr<Agent>> agents;
  auto exchange =
      std::make_unique<ExchangeAgent>(cfg.tick_size, cfg.quote_sample_interval, &record);
  ExchangeAgent* exchange_ptr = exchange.get();
  agents.push_back(std::move(exchange));

  for (int i = 0; i < cfg.counts.zero_intelligence; ++i)
    agents.push_back(std::make_unique<ZiAgent>(kZiBaseId + i, cfg.zi, &fundamental));
  for (int i = 0; i < cfg.counts.momentum; ++i) {
    auto agent = std::make_unique<MomentumAgent>(kMomentumBaseId + i, cfg.momentum);
    exchange_ptr->subscribe(agent->id(), cfg.momentum.wakeup_interval);
    agents.push_back(std::move(agent));
  }
  for (int i = 0; i < cfg.counts.noise; ++i)
    agents.push_back(std::make_unique<NoiseAgent>(kNoiseBaseId + i, cfg.noise));
  if (cfg.counts.q_learner == 1) {
    auto agent = std::make_unique<LearnerAgent>(cfg.learner, cfg.fundamental.r_bar,
                                                learner_hook, &record);
    exchange_ptr->subscribe(agent->id(), cfg.learner.decision_interval);
    agents.push_back(std::move(agent));
  }

  for (auto& agent : agents) kernel.add_agent(agent.get());
  kernel.run();

  record.events_processed = kernel.events_processed();
  return record;
}

// Adapts a scenario to the generic training loop; episode e runs with the
// stream mix(seed, e) so episodes are independent and reproducible.
class MarketEpisodeRunner {
 public:
  MarketEpisodeRunner(ScenarioConfig cfg, std::uint64_t seed)
      : cfg_(std::move(cfg)), seed_(seed) {}

  rl::EpisodeOutcome operator()(int episode, rl::DecisionHook& hook) {
    EpisodeRecord record =
        run_episode(cfg_, mix_seed(seed_, static_cast<std::uint64_t>(episode)), &hook);
    rl::EpisodeOutcome out;
    out.reward = record.episode_reward;
    out.tuples.reserve(record.tuples.size());
    for (const auto& logged : record.tuples) {
      out.tuples.push_back(rl::StepTuple{state_index(logged.tuple.state),
                                         static_cast<int>(logged.tuple.action),
                                         logged.tuple.reward,
                                         state_index(logged.tuple.next_state)});
    }
    if (keep_records_) records_.push_back(std::move(record));
    return out;
  }

  void keep_records(bool keep) { keep_records_ = keep; }
  const std::vector<EpisodeRecord>& records() const { return records_; }

 private:
  ScenarioConfig cfg_;
  std::uint64_t seed_;
  bool keep_records_{false};
  std::vector<EpisodeRecord> records_;
};

inline rl::LegalityFn trading_legality() {
  return [](int state) { return legal_actions_for_state_index(state); };
}

inline rl::TabularLearner make_trading_learner(const rl::LearningParams& params,
                                               std::uint64_t seed) {
  return rl::TabularLearner(kTraderStates, kTraderActions, params, trading_legality(), seed);
}

}  // namespace mktsim

namespace mktsim::rl {

// Tabular Q-learning over simulated sessions: K episodes of the scenario,
// one q_update per decision step, schedules decaying per step across the
// whole run. Returns the per-episode reward curve and the full tuple log.
struct MarketTrainResult {
  TrainResult log;
  TabularLearner learner;
};

inline MarketTrainResult train(const ScenarioConfig& cfg, const LearningParams& params,
                               std::uint64_t seed) {
  MarketTrainResult result{TrainResult{}, make_trading_learner(params, mix_seed(seed, 0xA1))};
  MarketEpisodeRunner runner(cfg, seed);
  result.log = train_episodes(runner, result.learner, params.episodes);
  return result;
}

}  // namespace mktsim::rl
