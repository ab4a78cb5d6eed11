#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mktsim/csv.hpp"
#include "mktsim/random.hpp"

namespace mktsim::rl {

// Defaults follow the experimental setup: gamma 0.98, alpha starting at 0.99
// decaying x0.999 per step, epsilon starting at 0.999 decaying x0.9995 per
// step. Decay is applied per learner decision step, never per episode, and
// both rates stay in (0,1] for any finite horizon.
struct LearningParams {
  double gamma{0.98};
  double alpha0{0.99};
  double alpha_decay{0.999};
  double epsilon0{0.999};
  double epsilon_decay{0.9995};
  int episodes{200};
};

// Maps a state index to the ascending list of legal action indices.
using LegalityFn = std::function<std::span<const int>(int state)>;

inline std::span<const int> all_actions_span(int n_actions) {
  static const std::vector<int> table = [] {
    std::vector<int> v(64);
    for (int i = 0; i < 64; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
  }();
  return std::span<const int>(table.data(), static_cast<std::size_t>(n_actions));
}

inline LegalityFn all_legal(int n_actions) {
  return [n_actions](int) { return all_actions_span(n_actions); };
}

// Dense action-value table, zero-initialized. Illegal cells are never written
// or selected as long as callers pass the legality mask.
class QTable {
 public:
  QTable(int n_states, int n_actions)
      : n_states_(n_states), n_actions_(n_actions),
        q_(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions), 0.0) {}

  double& operator()(int s, int a) { return q_[index(s, a)]; }
  double operator()(int s, int a) const { return q_[index(s, a)]; }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  double max_over(int s, std::span<const int> legal) const {
    double best = -std::numeric_limits<double>::infinity();
    for (int a : legal) best = std::max(best, (*this)(s, a));
    return best;
  }

  void save_csv(const std::string& path) const {
    csv::Writer w(path);
    w.row("state", "action", "value");
    for (int s = 0; s < n_states_; ++s)
      for (int a = 0; a < n_actions_; ++a) w.row(s, a, (*this)(s, a));
  }

  static QTable load_csv(const std::string& path) {
    const auto rows = csv::read(path);
    if (rows.size() < 2) throw std::runtime_error("qtable: empty file " + path);
    int max_s = 0, max_a = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      max_s = std::max(max_s, std::stoi(rows[i][0]));
      max_a = std::max(max_a, std::stoi(rows[i][1]));
    }
    QTable t(max_s + 1, max_a + 1);
    for (std::size_t i = 1; i < rows.size(); ++i)
      t(std::stoi(rows[i][0]), std::stoi(rows[i][1])) = std::stod(rows[i][2]);
    return t;
  }

 private:
  std::size_t index(int s, int a) const {
    if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_)
      throw std::out_of_range("qtable: state/action out of range");
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions_) +
           static_cast<std::size_t>(a);
  }

  int n_states_;
  int n_actions_;
  std::vector<double> q_;
};

inline bool contains(std::span<const int> legal, int a) {
  for (int x : legal)
    if (x == a) return true;
  return false;
}

// Argmax over the legal actions, lowest index winning ties. `legal` must be
// ascending, which every legality mask in this library provides.
inline int greedy_action(const QTable& q, int s, std::span<const int> legal) {
  int best = legal.front();
  double best_v = q(s, best);
  for (int a : legal) {
    const double v = q(s, a);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

// One-step Q-learning update:
//   Q(s,a) += alpha * (r + gamma * max_{a' legal in s'} Q(s',a') - Q(s,a)).
// Updating an illegal (s,a) cell is a hard error.
inline void q_update(QTable& q, int s, int a, double reward, int next_s,
                     std::span<const int> legal_in_s, std::span<const int> legal_in_next,
                     double alpha, double gamma) {
  if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("q_update: alpha not in (0,1]");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("q_update: gamma not in [0,1]");
  if (!contains(legal_in_s, a)) throw std::domain_error("q_update: illegal (state, action)");
  const double target = reward + gamma * q.max_over(next_s, legal_in_next);
  q(s, a) += alpha * (target - q(s, a));
}

// With probability epsilon a uniform legal action, otherwise greedy.
inline int epsilon_greedy(const QTable& q, int s, std::span<const int> legal, double epsilon,
                          std::mt19937_64& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("epsilon_greedy: epsilon not in [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    return legal[pick(rng)];
  }
  return greedy_action(q, s, legal);
}

// J = sum_k gamma^k r_k over a finite reward sequence.
inline double accumulated_return(std::span<const double> rewards, double gamma) {
  double total = 0.0;
  double factor = 1.0;
  for (double r : rewards) {
    total += factor * r;
    factor *= gamma;
  }
  return total;
}

// Greedy action selector frozen out of a Q-table; total over all states.
class Policy {
 public:
  Policy() = default;

  static Policy greedy_from(const QTable& q, const LegalityFn& legality) {
    Policy p;
    p.actions_.resize(static_cast<std::size_t>(q.n_states()));
    for (int s = 0; s < q.n_states(); ++s)
      p.actions_[static_cast<std::size_t>(s)] = greedy_action(q, s, legality(s));
    return p;
  }

  int operator()(int s) const { return actions_.at(static_cast<std::size_t>(s)); }
  int n_states() const { return static_cast<int>(actions_.size()); }

 private:
  std::vector<int> actions_;
};

struct StepTuple {
  int state{0};
  int action{0};
  double reward{0.0};
  int next_state{0};
};

// Callback pair driven by an episode runner: decide() picks the action for
// the current state, observe() feeds back the completed transition.
class DecisionHook {
 public:
  virtual ~DecisionHook() = default;
  virtual int decide(int state) = 0;
  virtual void observe(const StepTuple& t) = 0;
  virtual void begin_episode() {}
};

// Tabular Q-learner with the per-step multiplicative decay schedules. The
// same object persists across episodes so that after n total steps
// alpha = alpha0 * alpha_decay^n and epsilon = epsilon0 * epsilon_decay^n.
class TabularLearner : public DecisionHook {
 public:
  enum class Mode { explore, greedy };

  TabularLearner(int n_states, int n_actions, LearningParams params, LegalityFn legality,
                 std::uint64_t seed)
      : q_(n_states, n_actions), params_(params), legality_(std::move(legality)),
        alpha_(params.alpha0), epsilon_(params.epsilon0), rng_(make_rng(seed, 0x51)) {}

  int decide(int state) override {
    if (mode_ == Mode::greedy) return greedy_action(q_, state, legality_(state));
    return epsilon_greedy(q_, state, legality_(state), epsilon_, rng_);
  }

  void observe(const StepTuple& t) override {
    q_update(q_, t.state, t.action, t.reward, t.next_state, legality_(t.state),
             legality_(t.next_state), alpha_, params_.gamma);
    alpha_ *= params_.alpha_decay;
    epsilon_ *= params_.epsilon_decay;
    ++steps_;
  }

  QTable& table() { return q_; }
  const QTable& table() const { return q_; }
  const LegalityFn& legality() const { return legality_; }
  double alpha() const { return alpha_; }
  double epsilon() const { return epsilon_; }
  std::uint64_t steps() const { return steps_; }
  std::mt19937_64& rng() { return rng_; }
  const LearningParams& params() const { return params_; }
  void set_mode(Mode m) { mode_ = m; }
  Mode mode() const { return mode_; }

  Policy greedy_policy() const { return Policy::greedy_from(q_, legality_); }

 private:
  QTable q_;
  LearningParams params_;
  LegalityFn legality_;
  double alpha_;
  double epsilon_;
  std::mt19937_64 rng_;
  std::uint64_t steps_{0};
  Mode mode_{Mode::explore};
};

struct LoggedTuple {
  int episode{0};
  int step{0};
  StepTuple t;
};

struct TrainResult {
  std::vector<double> episode_rewards;
  std::vector<LoggedTuple> tuples;
};

struct EpisodeOutcome {
  double reward{0.0};
  std::vector<StepTuple> tuples;
};

// Generic training loop: RunEpisode is (int episode, DecisionHook&) ->
// EpisodeOutcome. The hook keeps its schedules across episodes.
template <typename RunEpisode>
TrainResult train_episodes(RunEpisode&& run_episode, DecisionHook& hook, int episodes) {
  TrainResult out;
  for (int e = 0; e < episodes; ++e) {
    hook.begin_episode();
    EpisodeOutcome outcome = run_episode(e, hook);
    out.episode_rewards.push_back(outcome.reward);
    for (std::size_t i = 0; i < outcome.tuples.size(); ++i)
      out.tuples.push_back(LoggedTuple{e, static_cast<int>(i), outcome.tuples[i]});
  }
  return out;
}

}  // namespace mktsim::rl
