#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mktsim/agents.hpp"
#include "mktsim/types.hpp"

namespace mktsim::sf {

// Mid prices sampled off the quote tape at a coarser grid (the tape itself is
// one row per quote_sample_interval). Absent quotes stay absent.
inline std::vector<std::optional<double>> sample_mids(const std::vector<QuoteRow>& quotes,
                                                      TimeNs open, TimeNs tape_step,
                                                      TimeNs grid_step) {
  if (grid_step % tape_step != 0)
    throw std::invalid_argument("sample_mids: grid must be a multiple of the tape step");
  const std::size_t stride = static_cast<std::size_t>(grid_step / tape_step);
  std::vector<std::optional<double>> mids;
  for (std::size_t i = 0; i < quotes.size(); i += stride) {
    const QuoteRow& q = quotes[i];
    if (q.time != open + static_cast<TimeNs>(i) * tape_step)
      throw std::invalid_argument("sample_mids: tape rows off the sampling grid");
    if (q.bid && q.ask)
      mids.push_back(static_cast<double>(*q.bid + *q.ask) / 2.0);
    else
      mids.push_back(std::nullopt);
  }
  return mids;
}

// Log returns ln m[i+k] - ln m[i] over a uniform grid, one per grid point
// whose horizon partner exists; gaps and non-positive mids are skipped.
inline std::vector<double> compute_returns(const std::vector<std::optional<double>>& mids,
                                           TimeNs dt, TimeNs grid_step) {
  if (grid_step <= 0 || dt <= 0 || dt % grid_step != 0)
    throw std::invalid_argument("compute_returns: dt must be a positive multiple of the grid");
  const std::size_t k = static_cast<std::size_t>(dt / grid_step);
  std::vector<double> returns;
  if (mids.size() <= k) return returns;
  for (std::size_t i = 0; i + k < mids.size(); ++i) {
    const auto& a = mids[i];
    const auto& b = mids[i + k];
    if (a && b && *a > 0.0 && *b > 0.0) returns.push_back(std::log(*b) - std::log(*a));
  }
  return returns;
}

// Pearson autocorrelation at lags 1..max_lag over overlapping pairs. Returns
// nothing (instead of NaNs) when the input is degenerate.
inline std::optional<std::vector<double>> autocorrelation(std::span<const double> returns,
                                                          int max_lag) {
  const std::size_t n = returns.size();
  if (max_lag < 1 || n < static_cast<std::size_t>(max_lag) + 2) return std::nullopt;

  std::vector<double> acf;
  acf.reserve(static_cast<std::size_t>(max_lag));
  for (int lag = 1; lag <= max_lag; ++lag) {
    const std::size_t m = n - static_cast<std::size_t>(lag);
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      mean_x += returns[i];
      mean_y += returns[i + static_cast<std::size_t>(lag)];
    }
    mean_x /= static_cast<double>(m);
    mean_y /= static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = returns[i] - mean_x;
      const double dy = returns[i + static_cast<std::size_t>(lag)] - mean_y;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    acf.push_back(sxy / std::sqrt(sxx * syy));
  }
  return acf;
}

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_A(x) - F_B(x)| in [0,1].
inline double distribution_distance(std::span<const double> sample_a,
                                    std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty())
    throw std::invalid_argument("distribution_distance: empty sample");
  std::vector<double> a(sample_a.begin(), sample_a.end());
  std::vector<double> b(sample_b.begin(), sample_b.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return sup;
}

struct DistanceMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // row-major n x n

  std::size_t size() const { return labels.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * size() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
};

inline DistanceMatrix make_matrix(std::vector<std::string> labels) {
  DistanceMatrix m;
  m.labels = std::move(labels);
  m.values.assign(m.labels.size() * m.labels.size(), 0.0);
  return m;
}

// Per-scenario distributional fingerprint: pooled returns at the two horizons
// plus the averaged autocorrelation curve treated as a sample over lags.
struct FactSamples {
  std::string label;
  std::vector<double> returns_short;  // dt = 1 minute
  std::vector<double> returns_long;   // dt = 10 minutes
  std::vector<double> acf_curve;      // lags 1..30 of the short-horizon returns
};

inline double fact_distance(const FactSamples& a, const FactSamples& b) {
  double total = 0.0;
  int parts = 0;
  if (!a.returns_short.empty() && !b.returns_short.empty()) {
    total += distribution_distance(a.returns_short, b.returns_short);
    ++parts;
  }
  if (!a.returns_long.empty() && !b.returns_long.empty()) {
    total += distribution_distance(a.returns_long, b.returns_long);
    ++parts;
  }
  if (!a.acf_curve.empty() && !b.acf_curve.empty()) {
    total += distribution_distance(a.acf_curve, b.acf_curve);
    ++parts;
  }
  if (parts == 0) throw std::invalid_argument("fact_distance: no usable samples");
  return total / static_cast<double>(parts);
}

inline DistanceMatrix sf_distance_matrix(std::span<const FactSamples> scenarios) {
  std::vector<std::string> labels;
  for (const auto& s : scenarios) labels.push_back(s.label);
  DistanceMatrix m = make_matrix(std::move(labels));
  for (std::size_t i = 0; i < scenarios.size(); ++i)
    for (std::size_t j = 0; j < scenarios.size(); ++j)
      m.at(i, j) = fact_distance(scenarios[i], scenarios[j]);
  return m;
}

// Agglomerative average-linkage clustering cut at k clusters. Asymmetric
// inputs are symmetrized by averaging. Merge ties break deterministically on
// the smallest member ids involved. Clusters come back sorted by their
// smallest member.
inline std::vector<std::vector<int>> cluster_scenarios(const DistanceMatrix& matrix, int k) {
  const int n = static_cast<int>(matrix.size());
  if (k < 1 || k > n) throw std::invalid_argument("cluster_scenarios: k out of range");

  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters.push_back({i});

  auto sym = [&](int i, int j) {
    return (matrix.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +
            matrix.at(static_cast<std::size_t>(j), static_cast<std::size_t>(i))) /
           2.0;
  };
  auto linkage = [&](const std::vector<int>& a, const std::vector<int>& b) {
    double total = 0.0;
    for (int i : a)
      for (int j : b) total += sym(i, j);
    return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };

  while (static_cast<int>(clusters.size()) > k) {
    std::size_t best_a = 0, best_b = 1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double d = linkage(clusters[a], clusters[b]);
        if (d < best_d) {
          best_d = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    auto& target = clusters[best_a];
    target.insert(target.end(), clusters[best_b].begin(), clusters[best_b].end());
    std::sort(target.begin(), target.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return clusters;
}

// Mean distance inside clusters vs across them; the weaker separability
// check when exact cluster recovery is too seed-sensitive.
struct SeparationSummary {
  double mean_within{0.0};
  double mean_across{0.0};
};

inline SeparationSummary separation(const DistanceMatrix& matrix,
                                    const std::vector<std::vector<int>>& clusters) {
  auto cluster_of = [&](int i) {
    for (std::size_t c = 0; c < clusters.size(); ++c)
      for (int m : clusters[c])
        if (m == i) return c;
    throw std::invalid_argument("separation: id missing from clusters");
  };
  double within = 0.0, across = 0.0;
  int n_within = 0, n_across = 0;
  const int n = static_cast<int>(matrix.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = matrix.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (cluster_of(i) == cluster_of(j)) {
        within += d;
        ++n_within;
      } else {
        across += d;
        ++n_across;
      }
    }
  }
  SeparationSummary s;
  if (n_within > 0) s.mean_within = within / n_within;
  if (n_across > 0) s.mean_across = across / n_across;
  return s;
}

struct Histogram {
  std::vector<double> edges;   // nbins + 1
  std::vector<std::int64_t> counts;  // nbins
};

inline Histogram histogram(std::span<const double> samples, int nbins) {
  if (samples.empty() || nbins < 1) throw std::invalid_argument("histogram: bad input");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  Histogram h;
  const double lo = *mn;
  const double hi = *mx > *mn ? *mx : *mn + 1.0;
  for (int i = 0; i <= nbins; ++i)
    h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / nbins);
  h.counts.assign(static_cast<std::size_t>(nbins), 0);
  for (double x : samples) {
    auto bin = static_cast<std::size_t>((x - lo) / (hi - lo) * nbins);
    if (bin >= static_cast<std::size_t>(nbins)) bin = static_cast<std::size_t>(nbins) - 1;
    ++h.counts[bin];
  }
  return h;
}

}  // namespace mktsim::sf
