#pragma once

// Error estimation for correlated series (batch means), pooling across
// independent replicas, and the one-sample Kolmogorov-Smirnov machinery.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace polychain {

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  double n_effective = 0.0;   // naive variance / squared standard error
  double replica_spread = 0.0;  // sd of replica means, 0 for a single replica
};

struct BatchMeansResult {
  double mean = 0.0;
  double std_error = 0.0;
  double n_effective = 0.0;
  long n_samples = 0;
};

// Splits the series into batch_count equal blocks (trailing remainder
// dropped) and treats block averages as approximately independent.
inline BatchMeansResult batch_means(std::span<const double> series, int batch_count) {
  if (batch_count < 2) throw std::invalid_argument("batch_means: batch_count must be >= 2");
  const long m = static_cast<long>(series.size());
  if (m < batch_count) throw std::invalid_argument("batch_means: fewer samples than batches");
  const long batch_size = m / batch_count;
  const long used = batch_size * batch_count;

  double mean = 0.0;
  for (long i = 0; i < used; ++i) mean += series[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(used);

  double batch_var = 0.0;
  for (int b = 0; b < batch_count; ++b) {
    double bm = 0.0;
    for (long i = b * batch_size; i < (b + 1) * batch_size; ++i)
      bm += series[static_cast<std::size_t>(i)];
    bm /= static_cast<double>(batch_size);
    batch_var += (bm - mean) * (bm - mean);
  }
  batch_var /= static_cast<double>(batch_count - 1);

  double naive_var = 0.0;
  for (long i = 0; i < used; ++i) {
    const double d = series[static_cast<std::size_t>(i)] - mean;
    naive_var += d * d;
  }
  naive_var /= static_cast<double>(used > 1 ? used - 1 : 1);

  BatchMeansResult out;
  out.mean = mean;
  out.std_error = std::sqrt(batch_var / static_cast<double>(batch_count));
  out.n_samples = used;
  out.n_effective = out.std_error > 0.0 ? naive_var / (out.std_error * out.std_error)
                                        : static_cast<double>(used);
  return out;
}

// Equal-weight pooling of independent replica estimates. The spread is the
// sample sd of the replica means; a spread far above the pooled error is the
// non-mixing signal.
inline EstimateWithError pool_replicas(std::span<const BatchMeansResult> replicas) {
  if (replicas.empty()) throw std::invalid_argument("pool_replicas: no replicas");
  const double r = static_cast<double>(replicas.size());
  EstimateWithError out;
  double se2 = 0.0;
  for (const auto& rep : replicas) {
    out.value += rep.mean;
    se2 += rep.std_error * rep.std_error;
    out.n_effective += rep.n_effective;
  }
  out.value /= r;
  out.std_error = std::sqrt(se2) / r;
  if (replicas.size() > 1) {
    double var = 0.0;
    for (const auto& rep : replicas) var += (rep.mean - out.value) * (rep.mean - out.value);
    out.replica_spread = std::sqrt(var / (r - 1.0));
  }
  return out;
}

inline constexpr double kSpreadFlagFactor = 6.0;

inline bool replicas_mixed(const EstimateWithError& e) {
  if (e.replica_spread == 0.0) return true;
  return e.replica_spread <= kSpreadFlagFactor * e.std_error;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// sup_x |F_n(x) - F(x)| for a continuous null CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return d;
}

// Kolmogorov limiting survival function Q(lambda) = 2 sum_j (-1)^{j-1}
// exp(-2 j^2 lambda^2), with the theta-dual series for small lambda.
inline double kolmogorov_q(double lambda) {
  constexpr double pi = 3.14159265358979323846;
  if (lambda < 1e-8) return 1.0;
  if (lambda < 1.18) {
    const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
    const double cdf = std::sqrt(2.0 * pi) / lambda *
                       (y + std::pow(y, 9.0) + std::pow(y, 25.0) + std::pow(y, 49.0));
    return 1.0 - cdf;
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Asymptotic p-value with Stephens' finite-n correction.
inline double ks_pvalue(double d, long n) {
  if (n < 1) throw std::invalid_argument("ks_pvalue: n must be >= 1");
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_q(d * (sn + 0.12 + 0.11 / sn));
}

}  // namespace polychain
