#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mktsim/csv.hpp"
#include "mktsim/rbm.hpp"
#include "mktsim/sf_metrics.hpp"
#include "mktsim/training.hpp"

namespace mktsim::experiments {

namespace fs = std::filesystem;

enum class Kind { simulate, train, sf_metrics, rbm_metrics, reuse_gain, prq };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::simulate: return "simulate";
    case Kind::train: return "train";
    case Kind::sf_metrics: return "sf-metrics";
    case Kind::rbm_metrics: return "rbm-metrics";
    case Kind::reuse_gain: return "reuse-gain";
    case Kind::prq: return "prq";
  }
  return "?";
}

inline Kind kind_from_string(const std::string& s) {
  if (s == "simulate") return Kind::simulate;
  if (s == "train") return Kind::train;
  if (s == "sf-metrics") return Kind::sf_metrics;
  if (s == "rbm-metrics") return Kind::rbm_metrics;
  if (s == "reuse-gain") return Kind::reuse_gain;
  if (s == "prq") return Kind::prq;
  throw std::invalid_argument("experiments: unknown kind '" + s + "'");
}

inline int default_episodes(Kind kind) {
  switch (kind) {
    case Kind::train: return 200;
    case Kind::reuse_gain: return 20;
    case Kind::prq: return 100;
    default: return 1;
  }
}

struct Manifest {
  Kind kind{Kind::simulate};
  std::vector<std::string> scenario_files;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir{"out"};
  int episodes{0};  // 0 = kind default
  bool full_scale{false};
  std::vector<std::string> library_files;  // q-table CSVs for reuse-gain / prq
  std::size_t min_tuples{1000};

  int effective_episodes() const { return episodes > 0 ? episodes : default_episodes(kind); }

  void validate() const {
    if (scenario_files.empty())
      throw std::invalid_argument("manifest: at least one scenario file is required");
    if (seeds.empty()) throw std::invalid_argument("manifest: at least one seed is required");
    for (const auto& f : scenario_files)
      if (!fs::exists(f))
        throw std::invalid_argument("manifest: scenario file not found: " + f);
    if (kind == Kind::reuse_gain || kind == Kind::prq) {
      if (library_files.empty())
        throw std::invalid_argument("manifest: a policy library is required for this kind");
      for (const auto& f : library_files)
        if (!fs::exists(f))
          throw std::invalid_argument("manifest: library file not found: " + f);
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["scenarios"] = scenario_files;
    j["seeds"] = seeds;
    j["out"] = out_dir;
    j["episodes"] = effective_episodes();
    j["full_scale"] = full_scale;
    j["library"] = library_files;
    j["min_tuples"] = min_tuples;
    return j;
  }
};

struct RunArtifacts {
  std::vector<std::string> files;  // paths relative to out_dir
  std::string summary_path;
};

// --- helpers ---------------------------------------------------------------

inline void parallel_over(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(n, hw));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

inline ScenarioConfig load_scaled(const std::string& file, bool full_scale) {
  ScenarioConfig cfg = load_scenario(file);
  return full_scale ? cfg : apply_desk_scale(cfg);
}

inline void write_trades_csv(const fs::path& path, const std::vector<TradeRow>& trades) {
  csv::Writer w(path.string());
  w.row("time", "price", "quantity");
  for (const auto& t : trades) w.row(t.time, t.price, t.quantity);
}

inline void write_quotes_csv(const fs::path& path, const std::vector<QuoteRow>& quotes) {
  csv::Writer w(path.string());
  w.row("time", "bid", "ask", "bid_vol", "ask_vol");
  for (const auto& q : quotes) w.row(q.time, q.bid, q.ask, q.bid_volume, q.ask_volume);
}

inline void write_tuples_csv(const fs::path& path,
                             const std::vector<std::pair<int, LoggedExperience>>& rows) {
  csv::Writer w(path.string());
  w.row("episode", "step", "state_bucket", "position", "action", "reward", "next_bucket",
        "next_position");
  for (const auto& [episode, logged] : rows) {
    const auto& t = logged.tuple;
    w.row(episode, logged.step, t.state.imbalance_bucket, to_string(t.state.position),
          to_string(t.action), t.reward, t.next_state.imbalance_bucket,
          to_string(t.next_state.position));
  }
}

inline void write_rewards_csv(const fs::path& path, const std::vector<double>& rewards) {
  csv::Writer w(path.string());
  w.row("episode", "reward");
  for (std::size_t e = 0; e < rewards.size(); ++e)
    w.row(static_cast<std::int64_t>(e), rewards[e]);
}

inline void write_matrix_csv(const fs::path& path, const sf::DistanceMatrix& m) {
  csv::Writer w(path.string());
  std::string header = "scenario";
  for (const auto& l : m.labels) header += "," + l;
  w.raw_line(header);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::string line = m.labels[i];
    for (std::size_t j = 0; j < m.size(); ++j) line += "," + csv::format(m.at(i, j));
    w.raw_line(line);
  }
}

inline sf::DistanceMatrix read_matrix_csv(const fs::path& path) {
  const auto rows = csv::read(path.string());
  if (rows.size() < 2) throw std::runtime_error("matrix: empty file " + path.string());
  std::vector<std::string> labels;
  for (std::size_t j = 1; j < rows[0].size(); ++j) labels.push_back(rows[0][j]);
  sf::DistanceMatrix m = sf::make_matrix(labels);
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (std::size_t j = 1; j < rows[i].size(); ++j)
      m.at(i - 1, j - 1) = std::stod(rows[i][j]);
  return m;
}

inline void write_clusters_csv(const fs::path& path,
                               const std::vector<std::string>& labels,
                               const std::vector<std::vector<int>>& clusters) {
  csv::Writer w(path.string());
  w.row("cluster", "scenario");
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (int member : clusters[c])
      w.row(static_cast<std::int64_t>(c), labels[static_cast<std::size_t>(member)]);
}

inline void write_histogram_csv(const fs::path& path, const sf::Histogram& h) {
  csv::Writer w(path.string());
  w.row("bin_lo", "bin_hi", "count");
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    w.row(h.edges[i], h.edges[i + 1], h.counts[i]);
}

inline rl::Policy load_policy(const std::string& qtable_csv) {
  const rl::QTable q = rl::QTable::load_csv(qtable_csv);
  if (q.n_states() != kTraderStates || q.n_actions() != kTraderActions)
    throw std::invalid_argument("policy: " + qtable_csv + " is not a trading q-table");
  return rl::Policy::greedy_from(q, trading_legality());
}

// --- per-kind pipelines ----------------------------------------------------

namespace detail {

struct SimOutput {
  std::string scenario_id;
  std::uint64_t seed;
  EpisodeRecord record;
};

// One episode per (scenario, seed) with a fresh default learner when the
// scenario has one; the shared collection layer for simulate/sf/rbm kinds.
inline std::vector<SimOutput> run_grid(const Manifest& manifest, int episodes_per_seed,
                                       std::vector<std::vector<ExperienceTuple>>* tuple_pool) {
  std::vector<ScenarioConfig> configs;
  for (const auto& f : manifest.scenario_files)
    configs.push_back(load_scaled(f, manifest.full_scale));

  const std::size_t n_jobs = configs.size() * manifest.seeds.size();
  std::vector<SimOutput> outputs(n_jobs);
  std::vector<std::vector<std::vector<ExperienceTuple>>> job_tuples(n_jobs);

  parallel_over(n_jobs, [&](std::size_t job) {
    const std::size_t si = job / manifest.seeds.size();
    const std::size_t ki = job % manifest.seeds.size();
    const ScenarioConfig& cfg = configs[si];
    const std::uint64_t seed = manifest.seeds[ki];

    rl::TabularLearner learner =
        make_trading_learner(rl::LearningParams{}, mix_seed(seed, 0xE5));
    EpisodeRecord merged;
    for (int e = 0; e < episodes_per_seed; ++e) {
      EpisodeRecord rec = run_episode(cfg, mix_seed(seed, static_cast<std::uint64_t>(e)),
                                      cfg.counts.q_learner ? &learner : nullptr);
      job_tuples[job].push_back({});
      for (const auto& logged : rec.tuples) job_tuples[job].back().push_back(logged.tuple);
      if (e == 0) {
        merged = std::move(rec);
      } else {
        merged.trades.insert(merged.trades.end(), rec.trades.begin(), rec.trades.end());
        merged.quotes.insert(merged.quotes.end(), rec.quotes.begin(), rec.quotes.end());
      }
    }
    outputs[job] = SimOutput{cfg.id, seed, std::move(merged)};
  });

  if (tuple_pool) {
    tuple_pool->assign(configs.size(), {});
    for (std::size_t job = 0; job < n_jobs; ++job) {
      const std::size_t si = job / manifest.seeds.size();
      for (const auto& ep : job_tuples[job])
        (*tuple_pool)[si].insert((*tuple_pool)[si].end(), ep.begin(), ep.end());
    }
  }
  return outputs;
}

inline void note(RunArtifacts& artifacts, const fs::path& out_dir, const fs::path& file) {
  artifacts.files.push_back(fs::relative(file, out_dir).string());
}

}  // namespace detail

inline RunArtifacts run_simulate(const Manifest& manifest) {
  RunArtifacts artifacts;
  const fs::path out(manifest.out_dir);
  std::map<std::string, ScenarioConfig> configs;
  for (const auto& f : manifest.scenario_files) {
    ScenarioConfig cfg = load_scaled(f, manifest.full_scale);
    configs[cfg.id] = cfg;
  }
  const auto outputs = detail::run_grid(manifest, 1, nullptr);
  for (const auto& sim : outputs) {
    const fs::path dir = out / "runs" / sim.scenario_id / ("seed_" + std::to_string(sim.seed));
    fs::create_directories(dir);
    write_trades_csv(dir / "trades.csv", sim.record.trades);
    write_quotes_csv(dir / "quotes.csv", sim.record.quotes);
    std::vector<std::pair<int, LoggedExperience>> rows;
    for (const auto& logged : sim.record.tuples) rows.push_back({0, logged});
    write_tuples_csv(dir / "tuples.csv", rows);
    nlohmann::json run;
    run["scenario"] = sim.scenario_id;
    run["seed"] = sim.seed;
    run["episode_reward"] = sim.record.episode_reward;
    run["trades"] = sim.record.trades.size();
    run["parameters"] = configs.at(sim.scenario_id).to_json();
    std::ofstream(dir / "run.json") << run.dump(2) << "\n";
    for (const char* f : {"trades.csv", "quotes.csv", "tuples.csv", "run.json"})
      detail::note(artifacts, out, dir / f);
  }
  return artifacts;
}

inline RunArtifacts run_train(const Manifest& manifest) {
  RunArtifacts artifacts;
  const fs::path out(manifest.out_dir);
  const ScenarioConfig cfg = load_scaled(manifest.scenario_files.front(), manifest.full_scale);
  if (cfg.counts.q_learner != 1)
    throw std::invalid_argument("train: the scenario has no q_learner");

  rl::LearningParams params;
  params.episodes = manifest.effective_episodes();

  std::vector<rl::MarketTrainResult> results;
  results.reserve(manifest.seeds.size());
  for (std::size_t i = 0; i < manifest.seeds.size(); ++i)
    results.push_back(rl::MarketTrainResult{rl::TrainResult{},
                                            make_trading_learner(params, 0)});
  parallel_over(manifest.seeds.size(), [&](std::size_t i) {
    results[i] = rl::train(cfg, params, manifest.seeds[i]);
  });

  for (std::size_t i = 0; i < manifest.seeds.size(); ++i) {
    const fs::path dir =
        out / "runs" / cfg.id / ("seed_" + std::to_string(manifest.seeds[i]));
    fs::create_directories(dir);
    results[i].learner.table().save_csv((dir / "qtable.csv").string());
    write_rewards_csv(dir / "rewards.csv", results[i].log.episode_rewards);
    std::vector<std::pair<int, LoggedExperience>> rows;
    for (const auto& lt : results[i].log.tuples) {
      LoggedExperience le{lt.step,
                          ExperienceTuple{state_from_index(lt.t.state),
                                          static_cast<TraderAction>(lt.t.action), lt.t.reward,
                                          state_from_index(lt.t.next_state)}};
      rows.push_back({lt.episode, le});
    }
    write_tuples_csv(dir / "tuples.csv", rows);
    for (const char* f : {"qtable.csv", "rewards.csv", "tuples.csv"})
      detail::note(artifacts, out, dir / f);
  }
  return artifacts;
}

// Distributional fingerprints from the quote tapes: pooled 1-minute and
// 10-minute returns plus the seed-averaged autocorrelation curve over 30
// one-minute lags.
inline sf::FactSamples fact_samples_for(const std::string& label,
                                        const std::vector<const EpisodeRecord*>& episodes,
                                        const ScenarioConfig& cfg) {
  sf::FactSamples samples;
  samples.label = label;
  std::vector<double> acf_sum(30, 0.0);
  int acf_count = 0;
  for (const EpisodeRecord* rec : episodes) {
    const auto mids = sf::sample_mids(rec->quotes, cfg.market_open,
                                      cfg.quote_sample_interval, minutes(1));
    const auto r1 = sf::compute_returns(mids, minutes(1), minutes(1));
    const auto r10 = sf::compute_returns(mids, minutes(10), minutes(1));
    samples.returns_short.insert(samples.returns_short.end(), r1.begin(), r1.end());
    samples.returns_long.insert(samples.returns_long.end(), r10.begin(), r10.end());
    if (const auto acf = sf::autocorrelation(r1, 30)) {
      for (std::size_t k = 0; k < acf->size(); ++k) acf_sum[k] += (*acf)[k];
      ++acf_count;
    }
  }
  if (acf_count > 0)
    for (double v : acf_sum) samples.acf_curve.push_back(v / acf_count);
  return samples;
}

inline RunArtifacts run_sf_metrics(const Manifest& manifest) {
  RunArtifacts artifacts;
  const fs::path out(manifest.out_dir);
  fs::create_directories(out);

  std::vector<ScenarioConfig> configs;
  for (const auto& f : manifest.scenario_files)
    configs.push_back(load_scaled(f, manifest.full_scale));

  const auto outputs = detail::run_grid(manifest, manifest.effective_episodes(), nullptr);

  std::vector<sf::FactSamples> per_scenario;
  for (std::size_t si = 0; si < configs.size(); ++si) {
    std::vector<const EpisodeRecord*> eps;
    for (std::size_t ki = 0; ki < manifest.seeds.size(); ++ki)
      eps.push_back(&outputs[si * manifest.seeds.size() + ki].record);
    per_scenario.push_back(fact_samples_for(configs[si].id, eps, configs[si]));
  }

  for (const auto& s : per_scenario) {
    auto dump_returns = [&](const std::vector<double>& r, const std::string& dt) {
      const fs::path p = out / ("returns_" + s.label + "_" + dt + ".csv");
      csv::Writer w(p.string());
      w.row("log_return");
      for (double x : r) w.row(x);
      detail::note(artifacts, out, p);
      if (!r.empty()) {
        const fs::path hp = out / ("hist_returns_" + s.label + "_" + dt + ".csv");
        write_histogram_csv(hp, sf::histogram(r, 50));
        detail::note(artifacts, out, hp);
      }
    };
    dump_returns(s.returns_short, "1min");
    dump_returns(s.returns_long, "10min");
    const fs::path acf_path = out / ("acf_" + s.label + ".csv");
    csv::Writer w(acf_path.string());
    w.row("lag", "acf");
    for (std::size_t k = 0; k < s.acf_curve.size(); ++k)
      w.row(static_cast<std::int64_t>(k + 1), s.acf_curve[k]);
    detail::note(artifacts, out, acf_path);
  }

  const sf::DistanceMatrix matrix = sf::sf_distance_matrix(per_scenario);
  write_matrix_csv(out / "sf_distance_matrix.csv", matrix);
  detail::note(artifacts, out, out / "sf_distance_matrix.csv");

  if (matrix.size() >= 2) {
    const auto clusters = sf::cluster_scenarios(matrix, 2);
    write_clusters_csv(out / "sf_clusters.csv", matrix.labels, clusters);
    detail::note(artifacts, out, out / "sf_clusters.csv");
  }
  return artifacts;
}

inline RunArtifacts run_rbm_metrics(const Manifest& manifest) {
  RunArtifacts artifacts;
  const fs::path out(manifest.out_dir);
  fs::create_directories(out);

  std::vector<ScenarioConfig> configs;
  for (const auto& f : manifest.scenario_files)
    configs.push_back(load_scaled(f, manifest.full_scale));
  std::vector<std::string> labels;
  for (const auto& c : configs) labels.push_back(c.id);

  std::vector<std::vector<ExperienceTuple>> tuples;
  detail::run_grid(manifest, manifest.effective_episodes(), &tuples);

  rbm::CdParams params;
  params.seed = manifest.seeds.front();
  const rbm::RbmDistanceResult result =
      rbm::rbm_distance_matrix(labels, tuples, params, manifest.min_tuples);

  write_matrix_csv(out / "rbm_distance_matrix_raw.csv", result.raw);
  write_matrix_csv(out / "rbm_distance_matrix.csv", result.normalized);
  detail::note(artifacts, out, out / "rbm_distance_matrix_raw.csv");
  detail::note(artifacts, out, out / "rbm_distance_matrix.csv");

  fs::create_directories(out / "models");
  for (std::size_t i = 0; i < result.models.size(); ++i) {
    const fs::path p = out / "models" / ("rbm_" + labels[i] + ".txt");
    rbm::save_model(result.models[i], p.string());
    detail::note(artifacts, out, p);
  }

  if (result.normalized.size() >= 2) {
    const auto clusters = sf::cluster_scenarios(result.normalized, 2);
    write_clusters_csv(out / "rbm_clusters.csv", result.normalized.labels, clusters);
    detail::note(artifacts, out, out / "rbm_clusters.csv");
  }
  return artifacts;
}

inline RunArtifacts run_reuse_gain(const Manifest& manifest) {
  RunArtifacts artifacts;
  const fs::path out(manifest.out_dir);
  fs::create_directories(out);
  const ScenarioConfig cfg = load_scaled(manifest.scenario_files.front(), manifest.full_scale);

  std::vector<rl::Policy> library;
  for (const auto& f : manifest.library_files) library.push_back(load_policy(f));

  const std::size_t n_jobs = library.size() * manifest.seeds.size();
  std::vector<double> gains(n_jobs, 0.0);
  parallel_over(n_jobs, [&](std::size_t job) {
    const std::size_t pi = job / manifest.seeds.size();
    const std::size_t ki = job % manifest.seeds.size();
    gains[job] = transfer::reuse_gain_market(library[pi], cfg, manifest.effective_episodes(),
                                             manifest.seeds[ki]);
  });

  csv::Writer w((out / "reuse_gain.csv").string());
  w.row("policy", "seed", "gain");
  for (std::size_t pi = 0; pi < library.size(); ++pi)
    for (std::size_t ki = 0; ki < manifest.seeds.size(); ++ki)
      w.row(manifest.library_files[pi], manifest.seeds[ki],
            gains[pi * manifest.seeds.size() + ki]);
  detail::note(artifacts, out, out / "reuse_gain.csv");

  csv::Writer m((out / "reuse_gain_mean.csv").string());
  m.row("policy", "mean_gain");
  for (std::size_t pi = 0; pi < library.size(); ++pi) {
    double total = 0.0;
    for (std::size_t ki = 0; ki < manifest.seeds.size(); ++ki)
      total += gains[pi * manifest.seeds.size() + ki];
    m.row(manifest.library_files[pi], total / static_cast<double>(manifest.seeds.size()));
  }
  detail::note(artifacts, out, out / "reuse_gain_mean.csv");
  return artifacts;
}

inline RunArtifacts run_prq(const Manifest& manifest) {
  RunArtifacts artifacts;
  const fs::path out(manifest.out_dir);
  const ScenarioConfig cfg = load_scaled(manifest.scenario_files.front(), manifest.full_scale);

  std::vector<rl::Policy> library;
  for (const auto& f : manifest.library_files) library.push_back(load_policy(f));
  const int episodes = manifest.effective_episodes();

  struct SeedResult {
    transfer::PrqResult prq;
    std::vector<double> scratch_rewards;
  };
  std::vector<SeedResult> results(manifest.seeds.size());
  parallel_over(manifest.seeds.size(), [&](std::size_t ki) {
    const std::uint64_t seed = manifest.seeds[ki];
    results[ki].prq = transfer::prq_learn_market(library, cfg, episodes, seed).prq;
    rl::LearningParams params;
    params.episodes = episodes;
    results[ki].scratch_rewards = rl::train(cfg, params, seed).log.episode_rewards;
  });

  for (std::size_t ki = 0; ki < manifest.seeds.size(); ++ki) {
    const std::uint64_t seed = manifest.seeds[ki];
    const fs::path dir = out / "runs" / cfg.id / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    const auto& res = results[ki].prq;

    csv::Writer rw((dir / "prq_rewards.csv").string());
    rw.row("episode", "reward", "selected_j");
    for (std::size_t e = 0; e < res.episode_rewards.size(); ++e)
      rw.row(static_cast<std::int64_t>(e + 1), res.episode_rewards[e],
             static_cast<std::int64_t>(res.selected[e]));

    auto trajectory = [&](const fs::path& p, const char* prefix,
                          const std::vector<std::vector<double>>& history) {
      csv::Writer w(p.string());
      std::string header = "episode";
      for (std::size_t j = 0; j <= library.size(); ++j)
        header += "," + std::string(prefix) + "_" + std::to_string(j);
      w.raw_line(header);
      for (std::size_t e = 0; e < history.size(); ++e) {
        std::string line = std::to_string(e + 1);
        for (double v : history[e]) line += "," + csv::format(v);
        w.raw_line(line);
      }
    };
    trajectory(dir / "prq_w.csv", "W", res.w_history);
    trajectory(dir / "prq_p.csv", "P", res.p_history);
    write_rewards_csv(dir / "qlearn_rewards.csv", results[ki].scratch_rewards);

    for (const char* f : {"prq_rewards.csv", "prq_w.csv", "prq_p.csv", "qlearn_rewards.csv"})
      detail::note(artifacts, out, dir / f);
  }
  return artifacts;
}

// --- summary ---------------------------------------------------------------

// Flat key=value digest of whatever artifacts exist under the output
// directory. Missing pieces are reported as "absent" rather than failing.
inline std::string summarize(const std::string& out_dir) {
  const fs::path out(out_dir);
  std::ostringstream s;

  auto clusters_line = [&](const fs::path& file) -> std::string {
    if (!fs::exists(file)) return "absent";
    const auto rows = csv::read(file.string());
    std::map<std::string, std::vector<std::string>> groups;
    for (std::size_t i = 1; i < rows.size(); ++i) groups[rows[i][0]].push_back(rows[i][1]);
    std::string line;
    for (const auto& [c, members] : groups) {
      if (!line.empty()) line += "|";
      for (std::size_t k = 0; k < members.size(); ++k)
        line += (k ? "," : "") + members[k];
    }
    return line;
  };

  auto separation_lines = [&](const fs::path& matrix_file, const fs::path& clusters_file,
                              const std::string& prefix) {
    if (!fs::exists(matrix_file) || !fs::exists(clusters_file)) {
      s << prefix << "_within=absent\n" << prefix << "_across=absent\n";
      return;
    }
    const sf::DistanceMatrix m = read_matrix_csv(matrix_file);
    const auto rows = csv::read(clusters_file.string());
    std::map<std::string, std::vector<int>> groups;
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < m.labels.size(); ++i) index[m.labels[i]] = static_cast<int>(i);
    for (std::size_t i = 1; i < rows.size(); ++i)
      groups[rows[i][0]].push_back(index.at(rows[i][1]));
    std::vector<std::vector<int>> clusters;
    for (const auto& [c, members] : groups) clusters.push_back(members);
    const auto sep = sf::separation(m, clusters);
    s << prefix << "_within=" << csv::format(sep.mean_within) << "\n";
    s << prefix << "_across=" << csv::format(sep.mean_across) << "\n";
  };

  s << "sf_clusters=" << clusters_line(out / "sf_clusters.csv") << "\n";
  separation_lines(out / "sf_distance_matrix.csv", out / "sf_clusters.csv", "sf");
  s << "rbm_clusters=" << clusters_line(out / "rbm_clusters.csv") << "\n";
  separation_lines(out / "rbm_distance_matrix.csv", out / "rbm_clusters.csv", "rbm");

  if (fs::exists(out / "reuse_gain_mean.csv")) {
    const auto rows = csv::read((out / "reuse_gain_mean.csv").string());
    for (std::size_t i = 1; i < rows.size(); ++i)
      s << "gain[" << fs::path(rows[i][0]).stem().string() << "]=" << rows[i][1] << "\n";
  } else {
    s << "reuse_gain=absent\n";
  }

  // First-10-episode comparison wherever prq runs exist.
  double prq_total = 0.0, scratch_total = 0.0;
  int prq_runs = 0;
  if (fs::exists(out / "runs")) {
    for (const auto& scenario_dir : fs::directory_iterator(out / "runs")) {
      for (const auto& seed_dir : fs::directory_iterator(scenario_dir)) {
        const fs::path prq_file = seed_dir.path() / "prq_rewards.csv";
        const fs::path ql_file = seed_dir.path() / "qlearn_rewards.csv";
        if (!fs::exists(prq_file) || !fs::exists(ql_file)) continue;
        auto first10 = [](const fs::path& f, std::size_t col) {
          const auto rows = csv::read(f.string());
          double total = 0.0;
          int n = 0;
          for (std::size_t i = 1; i < rows.size() && n < 10; ++i, ++n)
            total += std::stod(rows[i][col]);
          return n ? total / n : 0.0;
        };
        prq_total += first10(prq_file, 1);
        scratch_total += first10(ql_file, 1);
        ++prq_runs;
      }
    }
  }
  if (prq_runs > 0) {
    s << "prq_first10_mean=" << csv::format(prq_total / prq_runs) << "\n";
    s << "qlearn_first10_mean=" << csv::format(scratch_total / prq_runs) << "\n";
    s << "jumpstart_delta=" << csv::format((prq_total - scratch_total) / prq_runs) << "\n";
  } else {
    s << "prq_vs_qlearn=absent\n";
  }

  // Analysis outputs by CSV family.
  s << "csv.trades=runs/<scenario>/seed_<seed>/trades.csv\n";
  s << "csv.quotes=runs/<scenario>/seed_<seed>/quotes.csv\n";
  s << "csv.tuples=runs/<scenario>/seed_<seed>/tuples.csv\n";
  s << "csv.sf_returns=returns_<scenario>_<dt>.csv\n";
  s << "csv.sf_histograms=hist_returns_<scenario>_<dt>.csv\n";
  s << "csv.sf_acf=acf_<scenario>.csv\n";
  s << "csv.sf_distance_matrix=sf_distance_matrix.csv\n";
  s << "csv.rbm_distance_matrix=rbm_distance_matrix.csv\n";
  s << "csv.reuse_gain=reuse_gain.csv\n";
  s << "csv.prq_rewards=runs/<scenario>/seed_<seed>/prq_rewards.csv\n";
  s << "csv.prq_w=runs/<scenario>/seed_<seed>/prq_w.csv\n";
  s << "csv.prq_p=runs/<scenario>/seed_<seed>/prq_p.csv\n";
  return s.str();
}

inline RunArtifacts run_experiment(const Manifest& manifest) {
  manifest.validate();
  const fs::path out(manifest.out_dir);
  fs::create_directories(out);
  std::ofstream(out / "manifest.json") << manifest.to_json().dump(2) << "\n";

  RunArtifacts artifacts;
  switch (manifest.kind) {
    case Kind::simulate: artifacts = run_simulate(manifest); break;
    case Kind::train: artifacts = run_train(manifest); break;
    case Kind::sf_metrics: artifacts = run_sf_metrics(manifest); break;
    case Kind::rbm_metrics: artifacts = run_rbm_metrics(manifest); break;
    case Kind::reuse_gain: artifacts = run_reuse_gain(manifest); break;
    case Kind::prq: artifacts = run_prq(manifest); break;
  }
  artifacts.files.insert(artifacts.files.begin(), "manifest.json");

  const std::string summary = summarize(manifest.out_dir);
  std::ofstream(out / "summary.txt") << summary;
  artifacts.summary_path = (out / "summary.txt").string();
  artifacts.files.push_back("summary.txt");
  return artifacts;
}

}  // namespace mktsim::experiments
