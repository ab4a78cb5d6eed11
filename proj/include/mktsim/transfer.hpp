#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mktsim/rl.hpp"

namespace mktsim::transfer {

// Exploration mixing a past policy with the ongoing learner: with probability
// psi follow the past policy (masked to the legal set, falling back to
// `fallback_action` when its choice is illegal here), otherwise epsilon-greedy
// on the new Q-table.
inline int pi_reuse_action(const rl::Policy& past, const rl::QTable& q, int state,
                           std::span<const int> legal, double psi, double epsilon,
                           std::mt19937_64& rng, int fallback_action) {
  if (psi < 0.0 || psi > 1.0) throw std::invalid_argument("pi_reuse: psi not in [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < psi) {
    const int a = past(state);
    return rl::contains(legal, a) ? a : fallback_action;
  }
  return rl::epsilon_greedy(q, state, legal, epsilon, rng);
}

// Per-episode schedule: psi starts at psi0 and decays multiplicatively every
// step inside the episode, resetting at each episode start.
struct PiReuseParams {
  double psi0{1.0};
  double psi_decay{0.99};
};

// Decision hook layering pi-reuse exploration over a TabularLearner. Every
// executed transition still feeds the learner's off-policy update.
class PiReuseExplorer : public rl::DecisionHook {
 public:
  PiReuseExplorer(const rl::Policy& past, rl::TabularLearner& learner, PiReuseParams params,
                  int fallback_action)
      : past_(&past), learner_(&learner), params_(params), psi_(params.psi0),
        fallback_(fallback_action) {}

  int decide(int state) override {
    return pi_reuse_action(*past_, learner_->table(), state, learner_->legality()(state),
                           psi_, learner_->epsilon(), learner_->rng(), fallback_);
  }

  void observe(const rl::StepTuple& t) override {
    learner_->observe(t);
    psi_ *= params_.psi_decay;
  }

  void begin_episode() override {
    psi_ = params_.psi0;
    learner_->begin_episode();
  }

  double psi() const { return psi_; }

 private:
  const rl::Policy* past_;
  rl::TabularLearner* learner_;
  PiReuseParams params_;
  double psi_;
  int fallback_;
};

// Average per-episode reward over K pi-reuse episodes started from a zero
// Q-table; the performance-similarity score of `past` on the task behind
// `run_episode`.
template <typename RunEpisode>
double reuse_gain(const rl::Policy& past, RunEpisode&& run_episode, int episodes,
                  rl::TabularLearner& fresh_learner, PiReuseParams params,
                  int fallback_action) {
  if (episodes < 1) throw std::invalid_argument("reuse_gain: need at least one episode");
  PiReuseExplorer explorer(past, fresh_learner, params, fallback_action);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    explorer.begin_episode();
    total += run_episode(e, static_cast<rl::DecisionHook&>(explorer)).reward;
  }
  return total / static_cast<double>(episodes);
}

// Softmax selection probabilities P(j) = exp(tau*W_j) / sum_p exp(tau*W_p),
// computed with a max shift so large tau*W cannot overflow.
inline std::vector<double> softmax_probabilities(std::span<const double> w, double tau) {
  if (tau < 0.0) throw std::invalid_argument("softmax: temperature must be >= 0");
  if (w.empty()) throw std::invalid_argument("softmax: empty weight vector");
  double max_tw = -std::numeric_limits<double>::infinity();
  for (double x : w) max_tw = std::max(max_tw, tau * x);
  std::vector<double> p(w.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    p[i] = std::exp(tau * w[i] - max_tw);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

inline std::size_t sample_index(std::span<const double> probabilities, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return i;
  }
  return probabilities.size() - 1;
}

// Index 0 stands for the ongoing policy; 1..n for the library entries.
inline std::size_t prq_select_policy(std::span<const double> w, double tau,
                                     std::mt19937_64& rng) {
  return sample_index(softmax_probabilities(w, tau), rng);
}

// Temperature rises along a sigmoid from ~0 to tau_max across the run;
// midpoint and steepness are fractions of the episode count.
struct PrqParams {
  double tau_max{0.002};
  double midpoint_fraction{0.5};
  double steepness_fraction{0.1};
  PiReuseParams pi_reuse{};

  double tau_for_episode(int episode, int total_episodes) const {
    const double mid = midpoint_fraction * total_episodes;
    const double scale = std::max(1e-9, steepness_fraction * total_episodes);
    const double x = (static_cast<double>(episode) - mid) / scale;
    return tau_max / (1.0 + std::exp(-x));
  }
};

struct PrqResult {
  std::vector<double> episode_rewards;
  std::vector<std::size_t> selected;            // chosen j per episode
  std::vector<std::vector<double>> w_history;   // W_0..W_n per episode (post-update)
  std::vector<std::vector<double>> p_history;   // P(j) used for the selection
  std::vector<double> final_w;
};

// Policy reuse over a library of past policies plus the ongoing one. Each
// episode draws j from the softmax over reuse gains: j=0 runs the ongoing
// policy fully greedily (still learning), j>0 runs a pi-reuse episode with
// library policy j. The chosen entry's gain W_j is updated with the episode
// reward by incremental averaging.
template <typename RunEpisode>
PrqResult prq_learn(std::span<const rl::Policy> library, RunEpisode&& run_episode,
                    int episodes, rl::TabularLearner& learner, const PrqParams& params,
                    std::mt19937_64 selection_rng, int fallback_action) {
  if (library.empty()) throw std::invalid_argument("prq: the policy library is empty");

  const std::size_t n = library.size();
  std::vector<double> w(n + 1, 0.0);
  std::vector<std::uint64_t> uses(n + 1, 0);

  PrqResult result;
  for (int e = 1; e <= episodes; ++e) {
    const double tau = params.tau_for_episode(e, episodes);
    const std::vector<double> probs = softmax_probabilities(w, tau);
    const std::size_t j = sample_index(probs, selection_rng);

    double reward = 0.0;
    if (j == 0) {
      learner.begin_episode();
      learner.set_mode(rl::TabularLearner::Mode::greedy);
      reward = run_episode(e - 1, static_cast<rl::DecisionHook&>(learner)).reward;
      learner.set_mode(rl::TabularLearner::Mode::explore);
    } else {
      PiReuseExplorer explorer(library[j - 1], learner, params.pi_reuse, fallback_action);
      explorer.begin_episode();
      reward = run_episode(e - 1, static_cast<rl::DecisionHook&>(explorer)).reward;
    }

    w[j] = (w[j] * static_cast<double>(uses[j]) + reward) /
           static_cast<double>(uses[j] + 1);
    ++uses[j];

    result.episode_rewards.push_back(reward);
    result.selected.push_back(j);
    result.p_history.push_back(probs);
    result.w_history.push_back(w);
  }
  result.final_w = w;
  return result;
}

}  // namespace mktsim::transfer
