#pragma once

// Scaling-exponent estimation and regime classification, the coupling-sum
// O(N) check, the pressure functional
//
//   Psi_N(t) = (1/N) ln E[ exp(beta t <S_N, v>) ]
//            = (1/N) [ ln Z^{b/2}(h1 + t v1) + ln Z^{b/2}(h2 + t v2)
//                      - ln Z^{b/2}(h1) - ln Z^{b/2}(h2) ],
//
// its second derivative (the CLT variance), and the one-sample KS normality
// test for the tilted central limit theorem.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polychain/decoupling.hpp"
#include "polychain/ising.hpp"
#include "polychain/polymer.hpp"
#include "polychain/stats.hpp"
#include "polychain/transfer_matrix.hpp"
#include "polychain/util.hpp"

namespace polychain {

// sum_{1<=i<j<=N} |i-j|^(-alpha), computed as sum_r (N-r) r^(-alpha) in
// ascending r. For alpha > 1 this is O(N): the ratio sum/N increases to the
// infinite series sum_r r^(-alpha).
inline double coupling_sum_bound(double alpha, long n) {
  if (!(alpha > 1.0))
    throw std::domain_error("coupling_sum_bound: requires alpha > 1 (the sum is not O(N) otherwise)");
  if (n < 1) throw std::invalid_argument("coupling_sum_bound: n must be >= 1");
  double sum = 0.0;
  for (long r = 1; r < n; ++r)
    sum += static_cast<double>(n - r) * std::pow(static_cast<double>(r), -alpha);
  return sum;
}

// S(N)/N for N = 2..n_max in one O(n_max) pass, via
// S(N) = S(N-1) + sum_{r<N} r^(-alpha).
inline std::vector<double> coupling_sum_ratio_ladder(double alpha, long n_max) {
  if (!(alpha > 1.0)) throw std::domain_error("coupling_sum_ratio_ladder: requires alpha > 1");
  if (n_max < 2) throw std::invalid_argument("coupling_sum_ratio_ladder: n_max must be >= 2");
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(n_max - 1));
  double partial_zeta = 0.0;  // sum_{r=1}^{N-1} r^(-alpha)
  double sum = 0.0;           // S(N)
  for (long n = 2; n <= n_max; ++n) {
    partial_zeta += std::pow(static_cast<double>(n - 1), -alpha);
    sum += partial_zeta;
    ratios.push_back(sum / static_cast<double>(n));
  }
  return ratios;
}

enum class Regime { Diffusive, Superdiffusive, Ballistic, Inconclusive };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Diffusive: return "diffusive";
    case Regime::Superdiffusive: return "superdiffusive";
    case Regime::Ballistic: return "ballistic";
    case Regime::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct ScalingFit {
  double gamma_hat = 0.0;
  double gamma_stderr = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
  Regime regime = Regime::Inconclusive;
};

struct MsdFitPoint {
  double n = 0.0;
  double msd = 0.0;
  double std_error = 0.0;  // of msd; 0 marks an exact point
};

// Finite-N decision rule on the two-sigma CI; the band edges are calibration
// choices, not asymptotic statements.
inline Regime classify_regime(double gamma, double gamma_stderr) {
  const double lo = gamma - 2.0 * gamma_stderr;
  const double hi = gamma + 2.0 * gamma_stderr;
  if (lo > 0.8 && hi < 1.2) return Regime::Diffusive;
  if (lo > 1.8 && hi < 2.05) return Regime::Ballistic;
  if (lo > 1.2 && hi < 1.8) return Regime::Superdiffusive;
  return Regime::Inconclusive;
}

// Weighted least squares of ln(msd) on ln(N). With known errors the weights
// are 1/sigma^2 in log space (delta method); with any exact point the fit is
// unweighted and the slope error comes from the residuals.
inline ScalingFit fit_gamma(std::span<const MsdFitPoint> points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw std::invalid_argument("fit_gamma: need at least 3 points");
  bool weighted = true;
  for (int i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    if (!(p.msd > 0.0)) throw std::invalid_argument("fit_gamma: msd values must be > 0");
    if (i > 0 && !(p.n > points[static_cast<std::size_t>(i - 1)].n))
      throw std::invalid_argument("fit_gamma: N values must be strictly increasing");
    if (!(p.std_error > 0.0)) weighted = false;
  }

  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double x = std::log(p.n);
    const double y = std::log(p.msd);
    const double sigma = weighted ? p.std_error / p.msd : 1.0;
    const double w = 1.0 / (sigma * sigma);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double delta = sw * sxx - sx * sx;
  if (!(delta > 1e-12 * sw * sxx))
    throw std::invalid_argument("fit_gamma: degenerate abscissae");

  ScalingFit fit;
  fit.n_points = n;
  fit.gamma_hat = (sw * sxy - sx * sy) / delta;
  fit.intercept = (sxx * sy - sx * sxy) / delta;

  double rss = 0.0, tss = 0.0;
  const double y_bar = sy / sw;
  for (const auto& p : points) {
    const double x = std::log(p.n);
    const double y = std::log(p.msd);
    const double sigma = weighted ? p.std_error / p.msd : 1.0;
    const double w = 1.0 / (sigma * sigma);
    const double resid = y - (fit.intercept + fit.gamma_hat * x);
    rss += w * resid * resid;
    tss += w * (y - y_bar) * (y - y_bar);
  }
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  if (weighted) {
    fit.gamma_stderr = std::sqrt(sw / delta);
  } else {
    const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
    fit.gamma_stderr = std::sqrt(s2 * sw / delta);
  }
  fit.regime = classify_regime(fit.gamma_hat, fit.gamma_stderr);
  return fit;
}

namespace detail {

// ln Z^{beta}(field) for the decoupled chain, by enumeration when N fits the
// cap, else by transfer matrix when the couplings are nearest-neighbor only.
inline double chain_log_z(int n, double beta, double field, const CouplingSpec& couplings,
                          int site_cap) {
  if (n <= site_cap) return log_partition(IsingParams(n, beta, field, couplings), site_cap);
  if (auto j = couplings.nearest_neighbor_coupling())
    return nn_log_partition(NNChainParams(n, beta, *j, field));
  throw std::invalid_argument(
      "pressure: long-range couplings need n_steps within the enumeration cap");
}

}  // namespace detail

// Psi_N(t) via the two-chain decomposition. Refuses non-summable couplings.
inline double pressure(const PolymerParams& params, Vec2 v, double t,
                       int site_cap = kDefaultSiteCap) {
  if (!params.couplings.summable())
    throw std::invalid_argument("pressure: couplings must be summable");
  const FieldPair h = drift_to_fields(params.drift);
  const FieldPair vp = drift_to_fields(v);
  const double half_beta = 0.5 * params.beta;
  const int n = params.n_steps;
  const double tilted = detail::chain_log_z(n, half_beta, h.h1 + t * vp.h1, params.couplings, site_cap) +
                        detail::chain_log_z(n, half_beta, h.h2 + t * vp.h2, params.couplings, site_cap);
  const double base = detail::chain_log_z(n, half_beta, h.h1, params.couplings, site_cap) +
                      detail::chain_log_z(n, half_beta, h.h2, params.couplings, site_cap);
  return (tilted - base) / static_cast<double>(n);
}

// Independent route for small N: tilt the enumerated polymer directly.
inline double pressure_direct(const PolymerParams& params, Vec2 v, double t,
                              int walk_cap = kDefaultWalkCap) {
  const PolymerEnsemble ensemble(params, walk_cap);
  return ensemble.tilted_log_mgf(v, t) / static_cast<double>(params.n_steps);
}

// Central second difference with one Richardson step over {step, step/2}.
// At t0 = 0 this equals (1/N) Var(beta <S_N, v>).
inline double pressure_second_derivative(const PolymerParams& params, Vec2 v, double t0,
                                         double step = 0.02, int site_cap = kDefaultSiteCap) {
  if (!(step > 0.0) || step > 0.1)
    throw std::invalid_argument("pressure_second_derivative: step must be in (0, 0.1]");
  const auto second_diff = [&](double delta) {
    const double plus = pressure(params, v, t0 + delta, site_cap);
    const double mid = pressure(params, v, t0, site_cap);
    const double minus = pressure(params, v, t0 - delta, site_cap);
    return (plus - 2.0 * mid + minus) / (delta * delta);
  };
  const double coarse = second_diff(step);
  const double fine = second_diff(0.5 * step);
  return (4.0 * fine - coarse) / 3.0;
}

struct PressureCurve {
  std::vector<double> t_grid;
  std::vector<double> psi_values;
  int n_sites = 0;
  Vec2 direction;
  double v1 = 0.0;
  double v2 = 0.0;
};

inline PressureCurve pressure_curve(const PolymerParams& params, Vec2 v,
                                    std::span<const double> t_grid,
                                    int site_cap = kDefaultSiteCap) {
  PressureCurve curve;
  curve.n_sites = params.n_steps;
  curve.direction = v;
  const FieldPair vp = drift_to_fields(v);
  curve.v1 = vp.h1;
  curve.v2 = vp.h2;
  curve.t_grid.assign(t_grid.begin(), t_grid.end());
  curve.psi_values.reserve(t_grid.size());
  for (double t : t_grid) curve.psi_values.push_back(pressure(params, v, t, site_cap));
  return curve;
}

// Least-squares fit of y = limit + slope / n; used to carry enumerable-N
// pressure data toward larger N.
struct InverseNFit {
  double limit = 0.0;
  double slope = 0.0;
  double at(double n) const { return limit + slope / n; }
};

inline InverseNFit fit_inverse_n(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_inverse_n: need at least 2 points");
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [n, y] : points) {
    if (!(n > 0.0)) throw std::invalid_argument("fit_inverse_n: n must be > 0");
    const double x = 1.0 / n;
    sw += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double delta = sw * sxx - sx * sx;
  if (!(std::abs(delta) > 0.0)) throw std::invalid_argument("fit_inverse_n: degenerate abscissae");
  InverseNFit fit;
  fit.slope = (sw * sxy - sx * sy) / delta;
  fit.limit = (sxx * sy - sx * sxy) / delta;
  return fit;
}

struct KsTestResult {
  double ks_statistic = 0.0;
  double p_value = 0.0;
  double sample_variance = 0.0;
  bool sample_mean_centered = false;  // flagged KS variant: mean estimated from data
};

// One-sample KS test of `samples` against the centered normal with variance
// target_variance. Centering uses known_mean when the caller has an exact or
// transfer-matrix value; otherwise the sample mean is used and the result is
// flagged (the reported p-value is then approximate, Lilliefors-style).
inline KsTestResult clt_test(std::span<const double> samples, double target_variance,
                             std::optional<double> known_mean = std::nullopt) {
  if (samples.size() < 500) throw std::invalid_argument("clt_test: need at least 500 samples");
  if (!(target_variance > 0.0))
    throw std::invalid_argument("clt_test: target_variance must be > 0");

  double center;
  KsTestResult result;
  if (known_mean) {
    center = *known_mean;
  } else {
    double m = 0.0;
    for (double s : samples) m += s;
    center = m / static_cast<double>(samples.size());
    result.sample_mean_centered = true;
  }

  std::vector<double> centered;
  centered.reserve(samples.size());
  double var = 0.0;
  for (double s : samples) {
    const double c = s - center;
    centered.push_back(c);
    var += c * c;
  }
  result.sample_variance = var / static_cast<double>(samples.size() - 1);

  const double sd = std::sqrt(target_variance);
  result.ks_statistic = ks_statistic(std::move(centered),
                                     [sd](double x) { return normal_cdf(x / sd); });
  result.p_value = ks_pvalue(result.ks_statistic, static_cast<long>(samples.size()));
  return result;
}

}  // namespace polychain
