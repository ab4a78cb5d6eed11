#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mktsim/random.hpp"
#include "mktsim/types.hpp"

namespace mktsim {

struct FundamentalParams {
  Ticks r_bar{100'000};       // long-run mean, ticks
  double kappa{0.02};         // mean-reversion rate per step, in [0,1]
  double sigma{10.0};         // per-step noise std, ticks
  TimeNs step{seconds(1)};    // sampling grid
};

// Mean-reverting value series on a fixed time grid, integer ticks, floored at
// one tick. Deterministic given (params, seed).
class FundamentalSeries {
 public:
  static FundamentalSeries generate(const FundamentalParams& params, TimeNs start,
                                    TimeNs horizon, std::uint64_t seed) {
    if (params.kappa < 0.0 || params.kappa > 1.0)
      throw std::invalid_argument("fundamental: kappa must be in [0,1]");
    if (params.sigma < 0.0) throw std::invalid_argument("fundamental: sigma must be >= 0");
    if (params.step <= 0) throw std::invalid_argument("fundamental: step must be positive");
    if (params.r_bar < 1) throw std::invalid_argument("fundamental: r_bar must be >= 1 tick");

    FundamentalSeries series;
    series.start_ = start;
    series.step_ = params.step;
    const std::size_t n = static_cast<std::size_t>(horizon / params.step) + 1;
    series.values_.reserve(n);

    auto rng = make_rng(seed, 0);
    std::normal_distribution<double> noise(0.0, 1.0);
    Ticks v = params.r_bar;
    series.values_.push_back(v);
    for (std::size_t k = 1; k < n; ++k) {
      const double drift = params.kappa * static_cast<double>(params.r_bar - v);
      const double shock = params.sigma > 0.0 ? params.sigma * noise(rng) : 0.0;
      v = std::llround(static_cast<double>(v) + drift + shock);
      if (v < 1) v = 1;
      series.values_.push_back(v);
    }
    return series;
  }

  // Value at the grid point covering t (clamped to the series range).
  Ticks at(TimeNs t) const {
    if (t <= start_) return values_.front();
    std::size_t k = static_cast<std::size_t>((t - start_) / step_);
    if (k >= values_.size()) k = values_.size() - 1;
    return values_[k];
  }

  const std::vector<Ticks>& values() const { return values_; }
  TimeNs start() const { return start_; }
  TimeNs step() const { return step_; }

 private:
  std::vector<Ticks> values_;
  TimeNs start_{0};
  TimeNs step_{seconds(1)};
};

}  // namespace mktsim
