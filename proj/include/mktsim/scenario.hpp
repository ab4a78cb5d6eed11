#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mktsim/fundamental.hpp"
#include "mktsim/types.hpp"

namespace mktsim {

struct AgentCounts {
  int zero_intelligence{0};
  int exchange{1};
  int q_learner{0};
  int noise{0};
  int momentum{0};
};

struct ZiParams {
  double obs_noise_std{25.0};          // std of the private valuation noise, ticks
  Ticks offset_min{1};                 // limit price offset from the valuation
  Ticks offset_max{30};
  Quantity order_size{1};
  TimeNs mean_interarrival{seconds(30)};
};

struct MomentumParams {
  TimeNs wakeup_interval{seconds(30)};
  Quantity size_min{1};
  Quantity size_max{10};
};

struct NoiseParams {
  Quantity size_min{1};
  Quantity size_max{100};
};

struct LearnerParams {
  TimeNs decision_interval{seconds(60)};
  Quantity order_size{1};
};

struct ScenarioConfig {
  std::string id{"scenario"};
  AgentCounts counts;
  FundamentalParams fundamental;
  TimeNs market_open{hours(9) + minutes(30)};
  TimeNs market_close{hours(16)};
  Ticks tick_size{1};
  std::uint64_t seed{1};
  TimeNs latency{microseconds(1)};
  TimeNs quote_sample_interval{seconds(1)};
  ZiParams zi;
  MomentumParams momentum;
  NoiseParams noise;
  LearnerParams learner;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["id"] = id;
    j["zero_intelligent"] = counts.zero_intelligence;
    j["exchange"] = counts.exchange;
    j["q_learner"] = counts.q_learner;
    j["noise"] = counts.noise;
    j["momentum"] = counts.momentum;
    j["seed"] = seed;
    j["tick_size"] = tick_size;
    j["market_open_ns"] = market_open;
    j["market_close_ns"] = market_close;
    j["latency_ns"] = latency;
    j["quote_sample_ns"] = quote_sample_interval;
    j["fundamental"] = {{"r_bar", fundamental.r_bar},
                        {"kappa", fundamental.kappa},
                        {"sigma", fundamental.sigma},
                        {"step_ns", fundamental.step}};
    j["zi_params"] = {{"obs_noise_std", zi.obs_noise_std},
                      {"offset_min", zi.offset_min},
                      {"offset_max", zi.offset_max},
                      {"order_size", zi.order_size},
                      {"mean_interarrival_ns", zi.mean_interarrival}};
    j["momentum_params"] = {{"wakeup_interval_ns", momentum.wakeup_interval},
                            {"size_min", momentum.size_min},
                            {"size_max", momentum.size_max}};
    j["noise_params"] = {{"size_min", noise.size_min}, {"size_max", noise.size_max}};
    j["learner_params"] = {{"decision_interval_ns", learner.decision_interval},
                           {"order_size", learner.order_size}};
    return j;
  }

  void validate() const {
    if (counts.exchange != 1)
      throw std::invalid_argument("scenario: field 'exchange' must be exactly 1");
    if (counts.q_learner < 0 || counts.q_learner > 1)
      throw std::invalid_argument("scenario: field 'q_learner' must be 0 or 1");
    if (counts.zero_intelligence < 0)
      throw std::invalid_argument("scenario: field 'zero_intelligent' must be >= 0");
    if (counts.noise < 0) throw std::invalid_argument("scenario: field 'noise' must be >= 0");
    if (counts.momentum < 0)
      throw std::invalid_argument("scenario: field 'momentum' must be >= 0");
    if (market_close <= market_open)
      throw std::invalid_argument("scenario: field 'market_close_ns' must be after open");
    if (tick_size < 1) throw std::invalid_argument("scenario: field 'tick_size' must be >= 1");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key()))
      throw std::invalid_argument("scenario: unknown field '" + it.key() + "' in " + where);
  }
}

template <typename T>
void get_if_present(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

// Scenario files are JSON. The five agent-count fields are required and use
// the configuration-table row labels verbatim: zero_intelligent, exchange,
// q_learner, noise, momentum. Everything else is optional with defaults.
// Unknown keys are rejected.
inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("scenario: invalid JSON in " + path + ": " + e.what());
  }

  detail::reject_unknown_keys(
      j,
      {"id", "zero_intelligent", "exchange", "q_learner", "noise", "momentum", "seed",
       "tick_size", "market_open_ns", "market_close_ns", "latency_ns", "quote_sample_ns",
       "fundamental", "zi_params", "momentum_params", "noise_params", "learner_params"},
      "scenario");

  for (const char* required : {"zero_intelligent", "exchange", "q_learner", "noise", "momentum"}) {
    if (!j.contains(required))
      throw std::invalid_argument("scenario: missing required field '" + std::string(required) +
                                  "'");
  }

  ScenarioConfig cfg;
  cfg.counts.zero_intelligence = j.at("zero_intelligent").get<int>();
  cfg.counts.exchange = j.at("exchange").get<int>();
  cfg.counts.q_learner = j.at("q_learner").get<int>();
  cfg.counts.noise = j.at("noise").get<int>();
  cfg.counts.momentum = j.at("momentum").get<int>();

  detail::get_if_present(j, "id", cfg.id);
  detail::get_if_present(j, "seed", cfg.seed);
  detail::get_if_present(j, "tick_size", cfg.tick_size);
  detail::get_if_present(j, "market_open_ns", cfg.market_open);
  detail::get_if_present(j, "market_close_ns", cfg.market_close);
  detail::get_if_present(j, "latency_ns", cfg.latency);
  detail::get_if_present(j, "quote_sample_ns", cfg.quote_sample_interval);

  if (j.contains("fundamental")) {
    const auto& f = j.at("fundamental");
    detail::reject_unknown_keys(f, {"r_bar", "kappa", "sigma", "step_ns"}, "fundamental");
    detail::get_if_present(f, "r_bar", cfg.fundamental.r_bar);
    detail::get_if_present(f, "kappa", cfg.fundamental.kappa);
    detail::get_if_present(f, "sigma", cfg.fundamental.sigma);
    detail::get_if_present(f, "step_ns", cfg.fundamental.step);
  }
  if (j.contains("zi_params")) {
    const auto& z = j.at("zi_params");
    detail::reject_unknown_keys(
        z, {"obs_noise_std", "offset_min", "offset_max", "order_size", "mean_interarrival_ns"},
        "zi_params");
    detail::get_if_present(z, "obs_noise_std", cfg.zi.obs_noise_std);
    detail::get_if_present(z, "offset_min", cfg.zi.offset_min);
    detail::get_if_present(z, "offset_max", cfg.zi.offset_max);
    detail::get_if_present(z, "order_size", cfg.zi.order_size);
    detail::get_if_present(z, "mean_interarrival_ns", cfg.zi.mean_interarrival);
  }
  if (j.contains("momentum_params")) {
    const auto& m = j.at("momentum_params");
    detail::reject_unknown_keys(m, {"wakeup_interval_ns", "size_min", "size_max"},
                                "momentum_params");
    detail::get_if_present(m, "wakeup_interval_ns", cfg.momentum.wakeup_interval);
    detail::get_if_present(m, "size_min", cfg.momentum.size_min);
    detail::get_if_present(m, "size_max", cfg.momentum.size_max);
  }
  if (j.contains("noise_params")) {
    const auto& n = j.at("noise_params");
    detail::reject_unknown_keys(n, {"size_min", "size_max"}, "noise_params");
    detail::get_if_present(n, "size_min", cfg.noise.size_min);
    detail::get_if_present(n, "size_max", cfg.noise.size_max);
  }
  if (j.contains("learner_params")) {
    const auto& l = j.at("learner_params");
    detail::reject_unknown_keys(l, {"decision_interval_ns", "order_size"}, "learner_params");
    detail::get_if_present(l, "decision_interval_ns", cfg.learner.decision_interval);
    detail::get_if_present(l, "order_size", cfg.learner.order_size);
  }

  cfg.validate();
  return cfg;
}

// Desk-scale variant for fast local runs: a quarter of the zero-intelligence
// population and a two-hour session. Other counts are kept as configured.
inline ScenarioConfig apply_desk_scale(ScenarioConfig cfg) {
  cfg.counts.zero_intelligence = std::max(1, cfg.counts.zero_intelligence / 4);
  cfg.market_close = cfg.market_open + hours(2);
  return cfg;
}

}  // namespace mktsim
