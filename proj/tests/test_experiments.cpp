#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mktsim/experiments.hpp"

using namespace mktsim;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "mktsim_exp_tests";

std::string write_json(const std::string& name, const std::string& body) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << body;
  return p.string();
}

// A short session keeps the integration tests quick.
std::string short_scenario(const std::string& name, const std::string& id, int zi, int noise,
                           int momentum) {
  const TimeNs open = hours(9) + minutes(30);
  const TimeNs close = open + minutes(30);
  std::ostringstream body;
  body << "{\"id\":\"" << id << "\",\"zero_intelligent\":" << zi
       << ",\"exchange\":1,\"q_learner\":1,\"noise\":" << noise
       << ",\"momentum\":" << momentum << ",\"market_open_ns\":" << open
       << ",\"market_close_ns\":" << close << "}";
  return write_json(name, body.str());
}

}  // namespace

TEST_CASE("scenario loading") {
  SECTION("configuration-table column with all agent types") {
    const auto path = write_json("col4.json",
                                 R"({"zero_intelligent":100,"exchange":1,"q_learner":1,
                                     "noise":10,"momentum":10})");
    const ScenarioConfig cfg = load_scenario(path);
    CHECK(cfg.counts.zero_intelligence == 100);
    CHECK(cfg.counts.exchange == 1);
    CHECK(cfg.counts.q_learner == 1);
    CHECK(cfg.counts.noise == 10);
    CHECK(cfg.counts.momentum == 10);
  }

  SECTION("background-only column") {
    const auto path = write_json("col1.json",
                                 R"({"zero_intelligent":100,"exchange":1,"q_learner":1,
                                     "noise":0,"momentum":0})");
    const ScenarioConfig cfg = load_scenario(path);
    CHECK(cfg.counts.noise == 0);
    CHECK(cfg.counts.momentum == 0);
  }

  SECTION("two exchanges are rejected naming the field") {
    const auto path = write_json("twoexch.json",
                                 R"({"zero_intelligent":10,"exchange":2,"q_learner":0,
                                     "noise":0,"momentum":0})");
    CHECK_THROWS_WITH(load_scenario(path), Catch::Matchers::ContainsSubstring("exchange"));
  }

  SECTION("missing required count is rejected naming the field") {
    const auto path = write_json("missing.json",
                                 R"({"zero_intelligent":10,"exchange":1,"q_learner":0,
                                     "momentum":0})");
    CHECK_THROWS_WITH(load_scenario(path), Catch::Matchers::ContainsSubstring("noise"));
  }

  SECTION("unknown keys are rejected") {
    const auto path = write_json("unknown.json",
                                 R"({"zero_intelligent":10,"exchange":1,"q_learner":0,
                                     "noise":0,"momentum":0,"volatility":3})");
    CHECK_THROWS_WITH(load_scenario(path), Catch::Matchers::ContainsSubstring("volatility"));
  }

  SECTION("defaults fill omitted market parameters") {
    const auto path = write_json("defaults.json",
                                 R"({"zero_intelligent":10,"exchange":1,"q_learner":1,
                                     "noise":0,"momentum":0})");
    const ScenarioConfig cfg = load_scenario(path);
    CHECK(cfg.tick_size == 1);
    CHECK(cfg.market_open == hours(9) + minutes(30));
    CHECK(cfg.market_close == hours(16));
    CHECK(cfg.fundamental.r_bar == 100'000);
  }

  SECTION("desk scale quarters the zi population and shortens the session") {
    const auto path = write_json("scale.json",
                                 R"({"zero_intelligent":100,"exchange":1,"q_learner":1,
                                     "noise":10,"momentum":5})");
    const ScenarioConfig full = load_scenario(path);
    const ScenarioConfig desk = apply_desk_scale(full);
    CHECK(desk.counts.zero_intelligence == 25);
    CHECK(desk.market_close - desk.market_open == hours(2));
    CHECK(desk.counts.noise == full.counts.noise);
    CHECK(desk.counts.momentum == full.counts.momentum);
  }
}

TEST_CASE("simulate pipeline writes the expected artifacts") {
  const auto scenario = short_scenario("sim_a.json", "A", 10, 2, 0);
  experiments::Manifest manifest;
  manifest.kind = experiments::Kind::simulate;
  manifest.scenario_files = {scenario};
  manifest.seeds = {7};
  manifest.out_dir = (kWork / "sim_out").string();
  fs::remove_all(manifest.out_dir);

  const auto artifacts = experiments::run_experiment(manifest);
  const fs::path run = fs::path(manifest.out_dir) / "runs" / "A" / "seed_7";
  CHECK(fs::exists(run / "trades.csv"));
  CHECK(fs::exists(run / "quotes.csv"));
  CHECK(fs::exists(run / "tuples.csv"));
  CHECK(fs::exists(run / "run.json"));
  CHECK(fs::exists(fs::path(manifest.out_dir) / "manifest.json"));
  CHECK(fs::exists(artifacts.summary_path));

  const auto tuples = csv::read((run / "tuples.csv").string());
  REQUIRE(tuples.size() > 1);
  CHECK(tuples[0] == std::vector<std::string>{"episode", "step", "state_bucket", "position",
                                              "action", "reward", "next_bucket",
                                              "next_position"});

  const auto quotes = csv::read((run / "quotes.csv").string());
  CHECK(quotes[0] ==
        std::vector<std::string>{"time", "bid", "ask", "bid_vol", "ask_vol"});

  // The run manifest carries the full parameter set.
  nlohmann::json run_json;
  std::ifstream(run / "run.json") >> run_json;
  CHECK(run_json.at("scenario") == "A");
  CHECK(run_json.at("parameters").contains("fundamental"));
}

TEST_CASE("train pipeline emits a loadable q-table") {
  const auto scenario = short_scenario("train_a.json", "T", 8, 0, 0);
  experiments::Manifest manifest;
  manifest.kind = experiments::Kind::train;
  manifest.scenario_files = {scenario};
  manifest.seeds = {3};
  manifest.episodes = 4;
  manifest.out_dir = (kWork / "train_out").string();
  fs::remove_all(manifest.out_dir);
  experiments::run_experiment(manifest);

  const fs::path run = fs::path(manifest.out_dir) / "runs" / "T" / "seed_3";
  const rl::Policy policy = experiments::load_policy((run / "qtable.csv").string());
  CHECK(policy.n_states() == kTraderStates);
  const auto rewards = csv::read((run / "rewards.csv").string());
  CHECK(rewards.size() == 1 + 4);  // header + one row per episode
}

TEST_CASE("metric pipelines produce matrices with the documented shape") {
  const auto a = short_scenario("m_a.json", "A", 10, 0, 0);
  const auto b = short_scenario("m_b.json", "B", 10, 0, 4);

  experiments::Manifest manifest;
  manifest.kind = experiments::Kind::sf_metrics;
  manifest.scenario_files = {a, b};
  manifest.seeds = {1, 2};
  manifest.out_dir = (kWork / "sf_out").string();
  fs::remove_all(manifest.out_dir);
  experiments::run_experiment(manifest);

  const auto m =
      experiments::read_matrix_csv(fs::path(manifest.out_dir) / "sf_distance_matrix.csv");
  REQUIRE(m.size() == 2);
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(1, 1) == 0.0);
  CHECK(m.at(0, 1) == m.at(1, 0));
  CHECK(fs::exists(fs::path(manifest.out_dir) / "returns_A_1min.csv"));
  CHECK(fs::exists(fs::path(manifest.out_dir) / "acf_B.csv"));

  experiments::Manifest rbm_manifest = manifest;
  rbm_manifest.kind = experiments::Kind::rbm_metrics;
  rbm_manifest.out_dir = (kWork / "rbm_out").string();
  rbm_manifest.min_tuples = 10;
  fs::remove_all(rbm_manifest.out_dir);
  experiments::run_experiment(rbm_manifest);

  const auto norm = experiments::read_matrix_csv(fs::path(rbm_manifest.out_dir) /
                                                 "rbm_distance_matrix.csv");
  double lo = 1e9, hi = -1e9;
  for (double v : norm.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);
  CHECK(fs::exists(fs::path(rbm_manifest.out_dir) / "rbm_distance_matrix_raw.csv"));
  CHECK(fs::exists(fs::path(rbm_manifest.out_dir) / "models" / "rbm_A.txt"));
}

TEST_CASE("same-scenario seeds sit below the cross-scenario median distance") {
  // Fingerprints from two seeds of one scenario vs two other scenarios.
  const auto mk = [&](const std::string& id, int momentum) {
    ScenarioConfig cfg;
    cfg.id = id;
    cfg.counts = AgentCounts{15, 1, 1, 0, momentum};
    cfg.market_close = cfg.market_open + hours(1);
    return cfg;
  };
  const ScenarioConfig base = mk("base", 0);
  const ScenarioConfig other1 = mk("mom4", 4);
  const ScenarioConfig other2 = mk("mom8", 8);

  auto fingerprint = [&](const ScenarioConfig& cfg, std::uint64_t seed, std::string label) {
    rl::TabularLearner hook = make_trading_learner({}, mix_seed(seed, 0xE5));
    const EpisodeRecord rec = run_episode(cfg, seed, &hook);
    std::vector<const EpisodeRecord*> eps{&rec};
    return experiments::fact_samples_for(std::move(label), eps, cfg);
  };
  const std::vector<sf::FactSamples> all{
      fingerprint(base, 1, "base_s1"), fingerprint(base, 2, "base_s2"),
      fingerprint(other1, 1, "mom4"), fingerprint(other2, 1, "mom8")};
  const sf::DistanceMatrix m = sf::sf_distance_matrix(all);

  const double same_scenario = m.at(0, 1);
  std::vector<double> cross{m.at(0, 2), m.at(0, 3), m.at(1, 2),
                            m.at(1, 3), m.at(2, 3)};
  std::sort(cross.begin(), cross.end());
  const double median = cross[cross.size() / 2];
  CHECK(same_scenario < median);
}

TEST_CASE("summarize marks missing sections as absent") {
  const fs::path dir = kWork / "empty_out";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string summary = experiments::summarize(dir.string());
  CHECK(summary.find("sf_clusters=absent") != std::string::npos);
  CHECK(summary.find("rbm_clusters=absent") != std::string::npos);
  CHECK(summary.find("reuse_gain=absent") != std::string::npos);
  CHECK(summary.find("prq_vs_qlearn=absent") != std::string::npos);
}

TEST_CASE("prq pipeline emits per-episode trajectories and the jumpstart field") {
  const auto scenario = short_scenario("prq_t.json", "P", 8, 0, 0);

  // Build a tiny library from a quick training run.
  experiments::Manifest train_manifest;
  train_manifest.kind = experiments::Kind::train;
  train_manifest.scenario_files = {scenario};
  train_manifest.seeds = {5};
  train_manifest.episodes = 3;
  train_manifest.out_dir = (kWork / "prq_train").string();
  fs::remove_all(train_manifest.out_dir);
  experiments::run_experiment(train_manifest);
  const std::string qtable =
      (fs::path(train_manifest.out_dir) / "runs" / "P" / "seed_5" / "qtable.csv").string();

  experiments::Manifest manifest;
  manifest.kind = experiments::Kind::prq;
  manifest.scenario_files = {scenario};
  manifest.library_files = {qtable, qtable};
  manifest.seeds = {11};
  manifest.episodes = 6;
  manifest.out_dir = (kWork / "prq_out").string();
  fs::remove_all(manifest.out_dir);
  experiments::run_experiment(manifest);

  const fs::path run = fs::path(manifest.out_dir) / "runs" / "P" / "seed_11";
  const auto rewards = csv::read((run / "prq_rewards.csv").string());
  CHECK(rewards.size() == 1 + 6);
  CHECK(rewards[0] == std::vector<std::string>{"episode", "reward", "selected_j"});
  const auto w = csv::read((run / "prq_w.csv").string());
  CHECK(w.size() == 1 + 6);
  REQUIRE(w[0].size() == 1 + 3);  // episode, W_0..W_2
  const auto p = csv::read((run / "prq_p.csv").string());
  REQUIRE(p[0].size() == 1 + 3);
  // Episode 1 selection probabilities are uniform over ongoing + 2 entries.
  for (std::size_t j = 1; j < p[1].size(); ++j)
    CHECK(std::stod(p[1][j]) == Catch::Approx(1.0 / 3.0).margin(1e-12));

  const std::string summary = experiments::summarize(manifest.out_dir);
  CHECK(summary.find("jumpstart_delta=") != std::string::npos);

  // A missing library is a manifest validation error.
  experiments::Manifest bad = manifest;
  bad.library_files = {};
  CHECK_THROWS_AS(experiments::run_experiment(bad), std::invalid_argument);
}

TEST_CASE("reruns with an identical manifest overwrite deterministically") {
  const auto scenario = short_scenario("det.json", "D", 8, 1, 1);
  experiments::Manifest manifest;
  manifest.kind = experiments::Kind::simulate;
  manifest.scenario_files = {scenario};
  manifest.seeds = {9};
  manifest.out_dir = (kWork / "det_out").string();
  fs::remove_all(manifest.out_dir);

  experiments::run_experiment(manifest);
  const fs::path trades = fs::path(manifest.out_dir) / "runs" / "D" / "seed_9" / "trades.csv";
  std::stringstream first;
  first << std::ifstream(trades).rdbuf();
  experiments::run_experiment(manifest);
  std::stringstream second;
  second << std::ifstream(trades).rdbuf();
  CHECK(first.str() == second.str());
  REQUIRE(first.str().size() > 30);
}
