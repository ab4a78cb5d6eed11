#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mktsim/csv.hpp"
#include "mktsim/random.hpp"
#include "mktsim/sf_metrics.hpp"
#include "mktsim/trader_state.hpp"

namespace mktsim::rbm {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Binary RBM: weights are n_hidden x n_visible, visible biases b, hidden
// biases c.
struct RbmModel {
  int n_visible{0};
  int n_hidden{0};
  std::vector<double> w;  // row-major, w[j * n_visible + i]
  std::vector<double> b;  // visible biases
  std::vector<double> c;  // hidden biases

  double& weight(int j, int i) { return w[static_cast<std::size_t>(j) *
                                           static_cast<std::size_t>(n_visible) +
                                           static_cast<std::size_t>(i)]; }
  double weight(int j, int i) const {
    return w[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_visible) +
             static_cast<std::size_t>(i)];
  }

  static RbmModel init(int n_visible, int n_hidden, std::uint64_t seed,
                       double weight_std = 0.01) {
    RbmModel m;
    m.n_visible = n_visible;
    m.n_hidden = n_hidden;
    m.w.assign(static_cast<std::size_t>(n_visible) * static_cast<std::size_t>(n_hidden), 0.0);
    m.b.assign(static_cast<std::size_t>(n_visible), 0.0);
    m.c.assign(static_cast<std::size_t>(n_hidden), 0.0);
    auto rng = make_rng(seed, 0x4B);
    std::normal_distribution<double> g(0.0, weight_std);
    for (double& x : m.w) x = g(rng);
    return m;
  }
};

// p(h_j = 1 | v) = sigmoid(c_j + W_j . v), componentwise.
inline std::vector<double> hidden_activation(const RbmModel& m, std::span<const double> v) {
  if (static_cast<int>(v.size()) != m.n_visible)
    throw std::invalid_argument("rbm: visible vector has the wrong length");
  std::vector<double> p(static_cast<std::size_t>(m.n_hidden));
  for (int j = 0; j < m.n_hidden; ++j) {
    double act = m.c[static_cast<std::size_t>(j)];
    for (int i = 0; i < m.n_visible; ++i)
      act += m.weight(j, i) * v[static_cast<std::size_t>(i)];
    p[static_cast<std::size_t>(j)] = sigmoid(act);
  }
  return p;
}

// p(v_i = 1 | h) = sigmoid(b_i + (W^T h)_i), componentwise.
inline std::vector<double> visible_reconstruction(const RbmModel& m,
                                                  std::span<const double> h) {
  if (static_cast<int>(h.size()) != m.n_hidden)
    throw std::invalid_argument("rbm: hidden vector has the wrong length");
  std::vector<double> p(static_cast<std::size_t>(m.n_visible));
  for (int i = 0; i < m.n_visible; ++i) {
    double act = m.b[static_cast<std::size_t>(i)];
    for (int j = 0; j < m.n_hidden; ++j)
      act += m.weight(j, i) * h[static_cast<std::size_t>(j)];
    p[static_cast<std::size_t>(i)] = sigmoid(act);
  }
  return p;
}

inline std::vector<double> sample_binary(std::span<const double> probs,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> s(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) s[i] = unit(rng) < probs[i] ? 1.0 : 0.0;
  return s;
}

// One contrastive-divergence minibatch step. Positive phase uses the data and
// hidden probabilities; the negative phase takes `cd_steps` Gibbs sweeps with
// sampled hidden states, finishing on visible and hidden probabilities.
inline void cd_update(RbmModel& m, std::span<const std::vector<double>> batch, double lr,
                      std::mt19937_64& rng, int cd_steps = 1) {
  if (batch.empty() || lr == 0.0) return;
  const std::size_t nv = static_cast<std::size_t>(m.n_visible);
  const std::size_t nh = static_cast<std::size_t>(m.n_hidden);
  std::vector<double> dw(nv * nh, 0.0), db(nv, 0.0), dc(nh, 0.0);

  for (const auto& v0 : batch) {
    const std::vector<double> h0 = hidden_activation(m, v0);
    std::vector<double> h_sample = sample_binary(h0, rng);
    std::vector<double> vk, hk;
    for (int step = 0; step < cd_steps; ++step) {
      vk = visible_reconstruction(m, h_sample);
      hk = hidden_activation(m, vk);
      if (step + 1 < cd_steps) h_sample = sample_binary(hk, rng);
    }
    for (std::size_t j = 0; j < nh; ++j) {
      for (std::size_t i = 0; i < nv; ++i)
        dw[j * nv + i] += h0[j] * v0[i] - hk[j] * vk[i];
      dc[j] += h0[j] - hk[j];
    }
    for (std::size_t i = 0; i < nv; ++i) db[i] += v0[i] - vk[i];
  }

  const double scale = lr / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < dw.size(); ++k) m.w[k] += scale * dw[k];
  for (std::size_t i = 0; i < nv; ++i) m.b[i] += scale * db[i];
  for (std::size_t j = 0; j < nh; ++j) m.c[j] += scale * dc[j];
}

// Deterministic mean-field reconstruction error: hidden probabilities, then
// visible probabilities, no sampling. In [0,1] for binary inputs.
inline double reconstruction_mse(const RbmModel& m,
                                 std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw std::invalid_argument("rbm: no vectors to score");
  double total = 0.0;
  for (const auto& v : vectors) {
    const auto h = hidden_activation(m, v);
    const auto r = visible_reconstruction(m, h);
    double sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - r[i];
      sq += d * d;
    }
    total += sq / static_cast<double>(v.size());
  }
  return total / static_cast<double>(vectors.size());
}

// F(v) = -b.v - sum_j ln(1 + exp(c_j + W_j.v)). Exact likelihood on tiny
// models comes from enumerating every visible state.
inline double free_energy(const RbmModel& m, std::span<const double> v) {
  if (static_cast<int>(v.size()) != m.n_visible)
    throw std::invalid_argument("rbm: visible vector has the wrong length");
  double bv = 0.0;
  for (int i = 0; i < m.n_visible; ++i)
    bv += m.b[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
  double hidden_terms = 0.0;
  for (int j = 0; j < m.n_hidden; ++j) {
    double act = m.c[static_cast<std::size_t>(j)];
    for (int i = 0; i < m.n_visible; ++i)
      act += m.weight(j, i) * v[static_cast<std::size_t>(i)];
    // log(1 + e^act), stable for large |act|
    hidden_terms += act > 0.0 ? act + std::log1p(std::exp(-act)) : std::log1p(std::exp(act));
  }
  return -bv - hidden_terms;
}

// ln Z by enumeration over all 2^n_visible states; only for micro models.
inline double log_partition(const RbmModel& m) {
  if (m.n_visible > 20) throw std::invalid_argument("rbm: model too large to enumerate");
  double max_neg_f = -std::numeric_limits<double>::infinity();
  std::vector<double> neg_f;
  const std::uint32_t n = 1u << m.n_visible;
  neg_f.reserve(n);
  std::vector<double> v(static_cast<std::size_t>(m.n_visible));
  for (std::uint32_t mask = 0; mask < n; ++mask) {
    for (int i = 0; i < m.n_visible; ++i)
      v[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1.0 : 0.0;
    const double f = -free_energy(m, v);
    neg_f.push_back(f);
    max_neg_f = std::max(max_neg_f, f);
  }
  double total = 0.0;
  for (double f : neg_f) total += std::exp(f - max_neg_f);
  return max_neg_f + std::log(total);
}

inline double mean_log_likelihood(const RbmModel& m,
                                  std::span<const std::vector<double>> data) {
  const double log_z = log_partition(m);
  double total = 0.0;
  for (const auto& v : data) total += -free_energy(m, v) - log_z;
  return total / static_cast<double>(data.size());
}

struct CdParams {
  int n_hidden{16};
  double learning_rate{0.05};
  int cd_steps{1};
  int epochs{30};
  int minibatch{64};
  std::uint64_t seed{1};
  double weight_std{0.01};

  void validate() const {
    if (n_hidden < 1 || learning_rate <= 0.0 || cd_steps < 1 || epochs < 1 || minibatch < 1)
      throw std::invalid_argument("rbm: CD parameters must be positive");
  }
};

// Epoch-wise CD training with a seeded shuffle; deterministic given
// (data order, seed).
inline RbmModel train_rbm(const std::vector<std::vector<double>>& data,
                          const CdParams& params) {
  params.validate();
  if (data.empty()) throw std::invalid_argument("rbm: empty training set");
  const int n_visible = static_cast<int>(data.front().size());
  RbmModel m = RbmModel::init(n_visible, params.n_hidden, params.seed, params.weight_std);
  auto rng = make_rng(params.seed, 0x7D);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> batch;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(params.minibatch)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(params.minibatch));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(data[order[k]]);
      cd_update(m, batch, params.learning_rate, rng, params.cd_steps);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Experience-tuple featurization: 27 binary units.
//   one-hot imbalance bucket (7) | one-hot position (3) | one-hot action (3) |
//   reward code (sign bit + 3-bit magnitude thermometer at 1/10/100 ticks) |
//   one-hot next bucket (7) | one-hot next position (3)
// ---------------------------------------------------------------------------

inline constexpr int kEncodedBits = 27;
inline constexpr std::array<double, 3> kRewardThresholds{1.0, 10.0, 100.0};

struct RewardCode {
  bool nonnegative{true};
  int level{0};  // number of thresholds |r| reaches, 0..3

  bool operator==(const RewardCode&) const = default;
};

inline RewardCode encode_reward(double reward) {
  RewardCode code;
  code.nonnegative = reward >= 0.0;
  const double mag = std::abs(reward);
  for (double t : kRewardThresholds)
    if (mag >= t) ++code.level;
  return code;
}

// Representative magnitudes, chosen so re-encoding a decoded reward is stable.
inline double reward_from_code(const RewardCode& code) {
  static constexpr std::array<double, 4> reps{0.5, 1.0, 10.0, 100.0};
  const double mag = reps[static_cast<std::size_t>(code.level)];
  return code.nonnegative ? mag : -mag;
}

inline std::vector<double> encode_tuple(const ExperienceTuple& t) {
  std::vector<double> v(kEncodedBits, 0.0);
  std::size_t base = 0;
  v[base + static_cast<std::size_t>(t.state.imbalance_bucket)] = 1.0;
  base += kImbalanceBuckets;
  v[base + static_cast<std::size_t>(t.state.position)] = 1.0;
  base += kPositions;
  v[base + static_cast<std::size_t>(t.action)] = 1.0;
  base += kTraderActions;
  const RewardCode code = encode_reward(t.reward);
  v[base] = code.nonnegative ? 1.0 : 0.0;
  for (int k = 0; k < 3; ++k) v[base + 1 + static_cast<std::size_t>(k)] =
      code.level > k ? 1.0 : 0.0;
  base += 4;
  v[base + static_cast<std::size_t>(t.next_state.imbalance_bucket)] = 1.0;
  base += kImbalanceBuckets;
  v[base + static_cast<std::size_t>(t.next_state.position)] = 1.0;
  return v;
}

inline ExperienceTuple decode_tuple(std::span<const double> v) {
  if (static_cast<int>(v.size()) != kEncodedBits)
    throw std::invalid_argument("rbm: encoded tuple has the wrong length");
  auto one_hot = [&](std::size_t base, int n) {
    for (int k = 0; k < n; ++k)
      if (v[base + static_cast<std::size_t>(k)] == 1.0) return k;
    throw std::invalid_argument("rbm: malformed one-hot group");
  };
  ExperienceTuple t;
  std::size_t base = 0;
  t.state.imbalance_bucket = one_hot(base, kImbalanceBuckets);
  base += kImbalanceBuckets;
  t.state.position = static_cast<PositionState>(one_hot(base, kPositions));
  base += kPositions;
  t.action = static_cast<TraderAction>(one_hot(base, kTraderActions));
  base += kTraderActions;
  RewardCode code;
  code.nonnegative = v[base] == 1.0;
  code.level = 0;
  for (int k = 0; k < 3; ++k)
    if (v[base + 1 + static_cast<std::size_t>(k)] == 1.0) ++code.level;
  t.reward = reward_from_code(code);
  base += 4;
  t.next_state.imbalance_bucket = one_hot(base, kImbalanceBuckets);
  base += kImbalanceBuckets;
  t.next_state.position = static_cast<PositionState>(one_hot(base, kPositions));
  return t;
}

inline std::vector<std::vector<double>> encode_tuples(std::span<const ExperienceTuple> tuples) {
  std::vector<std::vector<double>> out;
  out.reserve(tuples.size());
  for (const auto& t : tuples) out.push_back(encode_tuple(t));
  return out;
}

// ---------------------------------------------------------------------------
// Cross-scenario distance: train one model per scenario on its own tuples and
// score every scenario's tuples under every model. The raw matrix is the mean
// reconstruction MSE (rows: model/source, columns: scored data/target) and is
// generally asymmetric; the normalized form is min-max scaled over the whole
// matrix so entries span [0,1].
// ---------------------------------------------------------------------------

struct RbmDistanceResult {
  sf::DistanceMatrix raw;
  sf::DistanceMatrix normalized;
  std::vector<RbmModel> models;
};

inline RbmDistanceResult rbm_distance_matrix(
    const std::vector<std::string>& labels,
    const std::vector<std::vector<ExperienceTuple>>& tuples_per_scenario,
    const CdParams& params, std::size_t min_tuples = 1000) {
  if (labels.size() != tuples_per_scenario.size())
    throw std::invalid_argument("rbm: labels/tuples size mismatch");
  for (std::size_t i = 0; i < tuples_per_scenario.size(); ++i) {
    if (tuples_per_scenario[i].size() < min_tuples)
      throw std::invalid_argument("rbm: scenario " + labels[i] + " has " +
                                  std::to_string(tuples_per_scenario[i].size()) +
                                  " tuples, need >= " + std::to_string(min_tuples));
  }

  const std::size_t n = labels.size();
  std::vector<std::vector<std::vector<double>>> encoded;
  encoded.reserve(n);
  for (const auto& tuples : tuples_per_scenario) encoded.push_back(encode_tuples(tuples));

  RbmDistanceResult result;
  result.raw = sf::make_matrix(labels);
  result.normalized = sf::make_matrix(labels);
  for (std::size_t i = 0; i < n; ++i) {
    CdParams p = params;
    p.seed = mix_seed(params.seed, i);
    result.models.push_back(train_rbm(encoded[i], p));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      result.raw.at(i, j) = reconstruction_mse(result.models[i], encoded[j]);

  const auto [mn, mx] = std::minmax_element(result.raw.values.begin(), result.raw.values.end());
  const double lo = *mn;
  const double span = *mx - *mn;
  for (std::size_t k = 0; k < result.raw.values.size(); ++k)
    result.normalized.values[k] = span > 0.0 ? (result.raw.values[k] - lo) / span : 0.0;
  return result;
}

// Plain-text model dump: dimensions header, then W rows, then b, then c.
inline void save_model(const RbmModel& m, const std::string& path) {
  csv::Writer w(path);
  w.raw_line(std::to_string(m.n_hidden) + " " + std::to_string(m.n_visible));
  for (int j = 0; j < m.n_hidden; ++j) {
    std::string line;
    for (int i = 0; i < m.n_visible; ++i) {
      if (i) line += ' ';
      line += csv::format(m.weight(j, i));
    }
    w.raw_line(line);
  }
  std::string bline;
  for (int i = 0; i < m.n_visible; ++i) {
    if (i) bline += ' ';
    bline += csv::format(m.b[static_cast<std::size_t>(i)]);
  }
  w.raw_line(bline);
  std::string cline;
  for (int j = 0; j < m.n_hidden; ++j) {
    if (j) cline += ' ';
    cline += csv::format(m.c[static_cast<std::size_t>(j)]);
  }
  w.raw_line(cline);
}

}  // namespace mktsim::rbm
