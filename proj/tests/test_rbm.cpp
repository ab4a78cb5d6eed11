#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mktsim/random.hpp"
#include "mktsim/rbm.hpp"

using namespace mktsim;
using namespace mktsim::rbm;

namespace {

std::vector<std::vector<double>> random_binary_data(int n, int bits, std::uint64_t seed) {
  auto rng = make_rng(seed, 0);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<std::vector<double>> data;
  for (int k = 0; k < n; ++k) {
    std::vector<double> v(static_cast<std::size_t>(bits));
    for (auto& x : v) x = coin(rng);
    data.push_back(v);
  }
  return data;
}

// Exact log-likelihood gradient by enumerating the model distribution.
struct ExactGrad {
  std::vector<double> dw, db, dc;
};

ExactGrad exact_ll_gradient(const RbmModel& m, const std::vector<std::vector<double>>& data) {
  const std::size_t nv = static_cast<std::size_t>(m.n_visible);
  const std::size_t nh = static_cast<std::size_t>(m.n_hidden);
  ExactGrad g{std::vector<double>(nv * nh, 0.0), std::vector<double>(nv, 0.0),
              std::vector<double>(nh, 0.0)};

  // Data term.
  for (const auto& v : data) {
    const auto h = hidden_activation(m, v);
    for (std::size_t j = 0; j < nh; ++j) {
      for (std::size_t i = 0; i < nv; ++i) g.dw[j * nv + i] += h[j] * v[i];
      g.dc[j] += h[j];
    }
    for (std::size_t i = 0; i < nv; ++i) g.db[i] += v[i];
  }
  const double n = static_cast<double>(data.size());
  for (auto& x : g.dw) x /= n;
  for (auto& x : g.db) x /= n;
  for (auto& x : g.dc) x /= n;

  // Model term via full enumeration of visible states.
  const double log_z = log_partition(m);
  std::vector<double> v(nv);
  for (std::uint32_t mask = 0; mask < (1u << m.n_visible); ++mask) {
    for (int i = 0; i < m.n_visible; ++i) v[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
    const double p = std::exp(-free_energy(m, v) - log_z);
    const auto h = hidden_activation(m, v);
    for (std::size_t j = 0; j < nh; ++j) {
      for (std::size_t i = 0; i < nv; ++i) g.dw[j * nv + i] -= p * h[j] * v[i];
      g.dc[j] -= p * h[j];
    }
    for (std::size_t i = 0; i < nv; ++i) g.db[i] -= p * v[i];
  }
  return g;
}

}  // namespace

TEST_CASE("tuple encoding") {
  SECTION("round trip over every legal discrete combination") {
    for (int bucket = 0; bucket < kImbalanceBuckets; ++bucket) {
      for (int pos = 0; pos < kPositions; ++pos) {
        const auto position = static_cast<PositionState>(pos);
        for (int a : legal_actions(position)) {
          for (double reward : {-100.0, -10.0, -1.0, -0.5, 0.5, 1.0, 10.0, 100.0}) {
            for (int nb : {0, 3, 6}) {
              ExperienceTuple t{TraderState{bucket, position}, static_cast<TraderAction>(a),
                                reward, TraderState{nb, PositionState::flat}};
              const auto v = encode_tuple(t);
              REQUIRE(v.size() == kEncodedBits);
              const ExperienceTuple back = decode_tuple(v);
              CHECK(back.state == t.state);
              CHECK(back.action == t.action);
              CHECK(back.next_state == t.next_state);
              CHECK(back.reward == t.reward);  // rewards above are representatives
              CHECK(encode_tuple(back) == v);
            }
          }
        }
      }
    }
  }

  SECTION("group sums and thermometer monotonicity") {
    ExperienceTuple t{TraderState{2, PositionState::flat}, TraderAction::buy, -37.5,
                      TraderState{4, PositionState::owns}};
    const auto v = encode_tuple(t);
    auto group_sum = [&](std::size_t base, int n) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += v[base + static_cast<std::size_t>(k)];
      return s;
    };
    CHECK(group_sum(0, 7) == 1.0);
    CHECK(group_sum(7, 3) == 1.0);
    CHECK(group_sum(10, 3) == 1.0);
    CHECK(group_sum(17, 7) == 1.0);
    CHECK(group_sum(24, 3) == 1.0);
    // Thermometer bits at 14..16 never rise after a zero.
    bool seen_zero = false;
    for (std::size_t k = 14; k <= 16; ++k) {
      if (v[k] == 0.0) seen_zero = true;
      if (seen_zero) CHECK(v[k] == 0.0);
    }
    // |-37.5| reaches thresholds 1 and 10 but not 100; sign bit is off.
    CHECK(v[13] == 0.0);
    CHECK(v[14] == 1.0);
    CHECK(v[15] == 1.0);
    CHECK(v[16] == 0.0);
  }

  SECTION("reward codes") {
    CHECK(encode_reward(0.0) == RewardCode{true, 0});
    CHECK(encode_reward(1.0) == RewardCode{true, 1});
    CHECK(encode_reward(-10.0) == RewardCode{false, 2});
    CHECK(encode_reward(250.0) == RewardCode{true, 3});
  }
}

TEST_CASE("hidden activation") {
  RbmModel m = RbmModel::init(3, 2, 1, 0.0);  // zero weights/biases
  const std::vector<double> v{1.0, 0.0, 1.0};

  SECTION("zero model gives one half everywhere") {
    for (double p : hidden_activation(m, v)) CHECK(p == 0.5);
  }

  SECTION("saturated bias pins the unit") {
    m.c[0] = 20.0;
    m.c[1] = -20.0;
    const auto p = hidden_activation(m, v);
    CHECK_THAT(p[0], Catch::Matchers::WithinAbs(1.0, 1e-8));
    CHECK_THAT(p[1], Catch::Matchers::WithinAbs(0.0, 1e-8));
  }

  SECTION("single weight ln 3 gives 0.75") {
    m.weight(0, 0) = std::log(3.0);
    const std::vector<double> unit{1.0, 0.0, 0.0};
    const auto p = hidden_activation(m, unit);
    CHECK_THAT(p[0], Catch::Matchers::WithinAbs(0.75, 1e-12));
  }

  SECTION("dimension mismatch is rejected") {
    const std::vector<double> shorty{1.0};
    CHECK_THROWS_AS(hidden_activation(m, shorty), std::invalid_argument);
  }
}

TEST_CASE("visible reconstruction mirrors with the transpose") {
  RbmModel m = RbmModel::init(3, 2, 2, 0.0);
  const std::vector<double> h01{0.0, 1.0};
  const std::vector<double> h00{0.0, 0.0};
  SECTION("zero model gives one half") {
    for (double p : visible_reconstruction(m, h01)) CHECK(p == 0.5);
  }
  SECTION("saturated visible bias") {
    m.b[1] = -20.0;
    CHECK_THAT(visible_reconstruction(m, h00)[1], Catch::Matchers::WithinAbs(0.0, 1e-8));
  }
  SECTION("transpose symmetry") {
    m.weight(1, 2) = 0.7;
    const auto down = visible_reconstruction(m, h01);
    CHECK_THAT(down[2], Catch::Matchers::WithinAbs(sigmoid(0.7), 1e-12));
    const std::vector<double> v001{0.0, 0.0, 1.0};
    const auto up = hidden_activation(m, v001);
    CHECK_THAT(up[1], Catch::Matchers::WithinAbs(sigmoid(0.7), 1e-12));
  }
}

TEST_CASE("contrastive divergence") {
  SECTION("zero learning rate leaves the model unchanged") {
    RbmModel m = RbmModel::init(4, 3, 3);
    const RbmModel before = m;
    auto rng = make_rng(5, 0);
    const std::vector<std::vector<double>> batch{{1, 0, 1, 0}};
    cd_update(m, batch, 0.0, rng);
    CHECK(m.w == before.w);
    CHECK(m.b == before.b);
    CHECK(m.c == before.c);
  }

  SECTION("memorizes a single repeated vector") {
    const std::vector<double> target{1.0, 0.0, 1.0, 1.0, 0.0};
    const std::vector<std::vector<double>> data(32, target);
    CdParams params;
    params.n_hidden = 4;
    params.epochs = 200;
    params.learning_rate = 0.05;
    params.minibatch = 8;
    params.seed = 11;
    const RbmModel m = train_rbm(data, params);
    CHECK(reconstruction_mse(m, data) < 0.05);
  }

  SECTION("averaged CD-1 direction agrees with the exact gradient") {
    RbmModel m = RbmModel::init(3, 2, 17, 0.1);
    const auto data = random_binary_data(20, 3, 99);
    const ExactGrad grad = exact_ll_gradient(m, data);

    // Average the stochastic CD-1 update over many repetitions at lr=1.
    auto rng = make_rng(7, 1);
    const std::size_t nw = m.w.size();
    std::vector<double> avg_dw(nw, 0.0), avg_db(m.b.size(), 0.0), avg_dc(m.c.size(), 0.0);
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
      RbmModel copy = m;
      cd_update(copy, data, 1.0, rng);
      for (std::size_t k = 0; k < nw; ++k) avg_dw[k] += copy.w[k] - m.w[k];
      for (std::size_t i = 0; i < m.b.size(); ++i) avg_db[i] += copy.b[i] - m.b[i];
      for (std::size_t j = 0; j < m.c.size(); ++j) avg_dc[j] += copy.c[j] - m.c[j];
    }
    double inner = 0.0;
    for (std::size_t k = 0; k < nw; ++k) inner += avg_dw[k] / reps * grad.dw[k];
    for (std::size_t i = 0; i < m.b.size(); ++i) inner += avg_db[i] / reps * grad.db[i];
    for (std::size_t j = 0; j < m.c.size(); ++j) inner += avg_dc[j] / reps * grad.dc[j];
    CHECK(inner > 0.0);
  }

  SECTION("training is deterministic given data order and seed") {
    const auto data = random_binary_data(50, 6, 3);
    CdParams params;
    params.n_hidden = 4;
    params.epochs = 10;
    params.seed = 21;
    const RbmModel a = train_rbm(data, params);
    const RbmModel b = train_rbm(data, params);
    CHECK(a.w == b.w);
    CHECK(a.b == b.b);
    CHECK(a.c == b.c);
  }
}

TEST_CASE("reconstruction mse") {
  SECTION("zero model scores 0.25 on binary input") {
    const RbmModel m = RbmModel::init(6, 3, 1, 0.0);
    const std::vector<std::vector<double>> vs{{1, 0, 1, 0, 1, 1}};
    CHECK(reconstruction_mse(m, vs) == 0.25);  // every unit reconstructs to 0.5
  }

  SECTION("bounded in [0,1] for binary inputs") {
    const RbmModel m = RbmModel::init(8, 4, 5, 1.0);
    const auto data = random_binary_data(30, 8, 6);
    const double mse = reconstruction_mse(m, data);
    CHECK(mse >= 0.0);
    CHECK(mse <= 1.0);
  }

  SECTION("empty input is rejected") {
    const RbmModel m = RbmModel::init(4, 2, 1);
    const std::vector<std::vector<double>> none;
    CHECK_THROWS_AS(reconstruction_mse(m, none), std::invalid_argument);
  }
}

TEST_CASE("free energy") {
  SECTION("all-zero model has F = -n_hidden * ln 2") {
    const RbmModel m = RbmModel::init(5, 3, 1, 0.0);
    const std::vector<double> v{1, 0, 1, 1, 0};
    CHECK_THAT(free_energy(m, v), Catch::Matchers::WithinAbs(-3.0 * std::log(2.0), 1e-12));
  }

  SECTION("visible bias shifts are linear") {
    RbmModel m = RbmModel::init(4, 2, 9, 0.05);
    const std::vector<double> v{1, 0, 0, 1};
    const double before = free_energy(m, v);
    m.b[0] += 0.37;
    CHECK_THAT(free_energy(m, v), Catch::Matchers::WithinAbs(before - 0.37, 1e-12));
  }

  SECTION("analytic weight gradient matches central finite differences") {
    RbmModel m = RbmModel::init(3, 2, 13, 0.2);
    const std::vector<double> v{1.0, 0.0, 1.0};
    const auto h = hidden_activation(m, v);
    const double eps = 1e-6;
    for (int j = 0; j < m.n_hidden; ++j) {
      for (int i = 0; i < m.n_visible; ++i) {
        RbmModel up = m, dn = m;
        up.weight(j, i) += eps;
        dn.weight(j, i) -= eps;
        const double numeric = (free_energy(up, v) - free_energy(dn, v)) / (2.0 * eps);
        const double analytic = -h[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(i)];
        CHECK_THAT(numeric, Catch::Matchers::WithinAbs(analytic, 1e-6));
      }
    }
  }

  SECTION("exact likelihood mostly improves epoch over epoch") {
    const auto data = random_binary_data(20, 3, 31);
    CdParams params;
    params.n_hidden = 2;
    params.learning_rate = 0.01;
    params.epochs = 1;
    params.minibatch = 20;
    params.seed = 8;

    RbmModel m = RbmModel::init(3, 2, params.seed, 0.01);
    auto rng = make_rng(params.seed, 0x7D);
    double prev = mean_log_likelihood(m, data);
    int improved = 0;
    const int epochs = 60;
    for (int e = 0; e < epochs; ++e) {
      cd_update(m, data, params.learning_rate, rng);
      const double ll = mean_log_likelihood(m, data);
      if (ll >= prev) ++improved;
      prev = ll;
    }
    CHECK(improved >= static_cast<int>(0.9 * epochs));
  }
}

TEST_CASE("rbm distance matrix") {
  // Two synthetic "scenarios" with different bucket occupancy plus one clone.
  auto make_tuples = [](int bucket, double reward, int n) {
    std::vector<ExperienceTuple> ts;
    for (int k = 0; k < n; ++k) {
      ts.push_back(ExperienceTuple{TraderState{bucket, PositionState::flat},
                                   TraderAction::hold, reward,
                                   TraderState{bucket, PositionState::flat}});
    }
    return ts;
  };
  const std::vector<std::string> labels{"a", "b", "a2"};
  std::vector<std::vector<ExperienceTuple>> tuples{make_tuples(1, 0.5, 40),
                                                   make_tuples(5, -20.0, 40),
                                                   make_tuples(1, 0.5, 40)};
  CdParams params;
  params.n_hidden = 8;
  params.epochs = 40;
  params.seed = 17;

  const RbmDistanceResult result = rbm_distance_matrix(labels, tuples, params, 10);

  SECTION("normalization spans exactly [0,1]") {
    const auto [mn, mx] = std::minmax_element(result.normalized.values.begin(),
                                              result.normalized.values.end());
    CHECK(*mn == 0.0);
    CHECK(*mx == 1.0);
  }

  SECTION("identical tuple multisets score close to the self distance") {
    const double self = result.raw.at(0, 0);
    const double clone = result.raw.at(0, 2);
    const auto [mn, mx] = std::minmax_element(result.raw.values.begin(),
                                              result.raw.values.end());
    const double spread = *mx - *mn;
    CHECK(std::abs(clone - self) < 0.1 * spread);
  }

  SECTION("a model scores its own scenario better than a structurally different one") {
    CHECK(result.raw.at(0, 0) < result.raw.at(0, 1));
    CHECK(result.raw.at(1, 1) < result.raw.at(1, 0));
  }

  SECTION("scenarios under the tuple floor are rejected") {
    CHECK_THROWS_AS(rbm_distance_matrix(labels, tuples, params, 1000), std::invalid_argument);
  }
}

TEST_CASE("model dump is writable") {
  const RbmModel m = RbmModel::init(4, 2, 3, 0.1);
  save_model(m, "/tmp/mktsim_rbm_model.txt");
  const auto rows = mktsim::csv::read("/tmp/mktsim_rbm_model.txt");
  REQUIRE(rows.size() == 1 + 2 + 1 + 1);  // header, W rows, b, c
}
