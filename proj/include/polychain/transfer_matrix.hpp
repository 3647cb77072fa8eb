#pragma once

// Exact finite-N observables for the nearest-neighbor Ising chain with free
// boundary conditions via 2x2 transfer matrices, and the closed-form infinite
// volume magnetization
//
//   m(beta, V(1), k) = sinh(beta k) / sqrt(sinh^2(beta k) + e^(-4 beta V(1))).
//
// Convention: the field weight e^(beta k s / 2) is split across the two
// matrices adjacent to each site, with the unpaired halves absorbed at the
// chain ends. Finite-N values then agree with the free-boundary enumeration
// in ising.hpp, which is the oracle of record.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "polychain/util.hpp"

namespace polychain {

struct NNChainParams {
  int n_sites;
  double beta;
  double j_coupling;  // V(1) > 0
  double field;       // k

  NNChainParams(int n_sites_, double beta_, double j_coupling_, double field_)
      : n_sites(n_sites_), beta(beta_), j_coupling(j_coupling_), field(field_) {
    if (n_sites < 1) throw std::invalid_argument("NNChainParams: n_sites must be >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument("NNChainParams: beta must be > 0");
    if (!(j_coupling > 0.0)) throw std::invalid_argument("NNChainParams: j_coupling must be > 0");
    if (std::abs(beta * field) > 700.0 || beta * j_coupling > 700.0)
      throw std::invalid_argument("NNChainParams: |beta*field| and beta*J must be <= 700");
  }
};

struct NNObservables {
  std::vector<double> magnetizations;  // <s_i>
  SquareMatrix correlations;           // <s_i s_j>
  double log_z = 0.0;
};

namespace detail {

using Vec2d = std::array<double, 2>;   // index 0 -> spin -1, index 1 -> spin +1
using Mat2d = std::array<std::array<double, 2>, 2>;

inline constexpr double spin_of(int idx) { return idx == 0 ? -1.0 : 1.0; }

inline Mat2d nn_transfer(const NNChainParams& p) {
  Mat2d t{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      t[a][b] = std::exp(p.beta * p.j_coupling * spin_of(a) * spin_of(b) +
                         0.5 * p.beta * p.field * (spin_of(a) + spin_of(b)));
  return t;
}

inline Vec2d nn_boundary(const NNChainParams& p) {
  return {std::exp(-0.5 * p.beta * p.field), std::exp(0.5 * p.beta * p.field)};
}

// v <- v * T (row vector) resp. T * v (column vector), then rescale to unit
// max and add the log of the scale to log_scale. Keeps partial products
// bounded at any chain length and temperature.
inline void apply_left(Vec2d& v, const Mat2d& t, double& log_scale) {
  Vec2d out{v[0] * t[0][0] + v[1] * t[1][0], v[0] * t[0][1] + v[1] * t[1][1]};
  double m = std::max(out[0], out[1]);
  v = {out[0] / m, out[1] / m};
  log_scale += std::log(m);
}

inline void apply_right(Vec2d& v, const Mat2d& t, double& log_scale) {
  Vec2d out{t[0][0] * v[0] + t[0][1] * v[1], t[1][0] * v[0] + t[1][1] * v[1]};
  double m = std::max(out[0], out[1]);
  v = {out[0] / m, out[1] / m};
  log_scale += std::log(m);
}

struct PartialProducts {
  std::vector<Vec2d> left, right;        // normalized partial vectors per site
  std::vector<double> left_log, right_log;
};

inline PartialProducts nn_partials(const NNChainParams& p) {
  const int n = p.n_sites;
  const Mat2d t = nn_transfer(p);
  const Vec2d b = nn_boundary(p);
  PartialProducts parts;
  parts.left.resize(static_cast<std::size_t>(n));
  parts.right.resize(static_cast<std::size_t>(n));
  parts.left_log.assign(static_cast<std::size_t>(n), 0.0);
  parts.right_log.assign(static_cast<std::size_t>(n), 0.0);
  parts.left[0] = b;
  for (int i = 1; i < n; ++i) {
    parts.left[static_cast<std::size_t>(i)] = parts.left[static_cast<std::size_t>(i - 1)];
    parts.left_log[static_cast<std::size_t>(i)] = parts.left_log[static_cast<std::size_t>(i - 1)];
    apply_left(parts.left[static_cast<std::size_t>(i)], t,
               parts.left_log[static_cast<std::size_t>(i)]);
  }
  parts.right[static_cast<std::size_t>(n - 1)] = b;
  for (int i = n - 2; i >= 0; --i) {
    parts.right[static_cast<std::size_t>(i)] = parts.right[static_cast<std::size_t>(i + 1)];
    parts.right_log[static_cast<std::size_t>(i)] = parts.right_log[static_cast<std::size_t>(i + 1)];
    apply_right(parts.right[static_cast<std::size_t>(i)], t,
                parts.right_log[static_cast<std::size_t>(i)]);
  }
  return parts;
}

}  // namespace detail

// <s_i> for one 0-based site, O(N).
inline double nn_site_magnetization(const NNChainParams& params, int site) {
  if (site < 0 || site >= params.n_sites)
    throw std::invalid_argument("nn_site_magnetization: site out of range");
  const detail::Mat2d t = detail::nn_transfer(params);
  const detail::Vec2d b = detail::nn_boundary(params);
  detail::Vec2d left = b, right = b;
  double dummy = 0.0;
  for (int i = 0; i < site; ++i) detail::apply_left(left, t, dummy);
  for (int i = params.n_sites - 1; i > site; --i) detail::apply_right(right, t, dummy);
  double num = 0.0, den = 0.0;
  for (int a = 0; a < 2; ++a) {
    num += left[static_cast<std::size_t>(a)] * detail::spin_of(a) * right[static_cast<std::size_t>(a)];
    den += left[static_cast<std::size_t>(a)] * right[static_cast<std::size_t>(a)];
  }
  return num / den;
}

inline double nn_log_partition(const NNChainParams& params) {
  auto parts = detail::nn_partials(params);
  double s = 0.0;
  for (int a = 0; a < 2; ++a) s += parts.left[0][static_cast<std::size_t>(a)] * parts.right[0][static_cast<std::size_t>(a)];
  return parts.left_log[0] + parts.right_log[0] + std::log(s);
}

// Full observable set: O(N) magnetizations, O(N^2) correlation matrix.
inline NNObservables nn_observables(const NNChainParams& params) {
  const int n = params.n_sites;
  const detail::Mat2d t = detail::nn_transfer(params);
  auto parts = detail::nn_partials(params);

  NNObservables obs;
  obs.magnetizations.resize(static_cast<std::size_t>(n));
  obs.correlations = SquareMatrix(n);

  {
    double s = 0.0;
    for (int a = 0; a < 2; ++a) s += parts.left[0][static_cast<std::size_t>(a)] * parts.right[0][static_cast<std::size_t>(a)];
    obs.log_z = parts.left_log[0] + parts.right_log[0] + std::log(s);
  }

  for (int i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double l = parts.left[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
      const double r = parts.right[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
      num += l * detail::spin_of(a) * r;
      den += l * r;
    }
    obs.magnetizations[static_cast<std::size_t>(i)] = num / den;
  }

  // For each row i, push the pair (L_i * s, L_i) rightward through T; the
  // shared rescaling cancels in the ratio at every j.
  for (int i = 0; i < n; ++i) {
    obs.correlations.at(i, i) = 1.0;
    detail::Vec2d with_spin{parts.left[static_cast<std::size_t>(i)][0] * detail::spin_of(0),
                            parts.left[static_cast<std::size_t>(i)][1] * detail::spin_of(1)};
    detail::Vec2d plain = parts.left[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      detail::Vec2d ws{with_spin[0] * t[0][0] + with_spin[1] * t[1][0],
                       with_spin[0] * t[0][1] + with_spin[1] * t[1][1]};
      detail::Vec2d pl{plain[0] * t[0][0] + plain[1] * t[1][0],
                       plain[0] * t[0][1] + plain[1] * t[1][1]};
      const double scale = std::max(pl[0], pl[1]);
      with_spin = {ws[0] / scale, ws[1] / scale};
      plain = {pl[0] / scale, pl[1] / scale};
      double num = 0.0, den = 0.0;
      for (int a = 0; a < 2; ++a) {
        const double r = parts.right[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
        num += with_spin[static_cast<std::size_t>(a)] * detail::spin_of(a) * r;
        den += plain[static_cast<std::size_t>(a)] * r;
      }
      obs.correlations.at(i, j) = num / den;
      obs.correlations.at(j, i) = num / den;
    }
  }
  return obs;
}

// Infinite-volume magnetization of the nearest-neighbor chain, from the
// classical transfer-matrix limit. Odd in k, values in (-1, 1).
inline double limit_magnetization(double beta, double v1, double k) {
  if (!(beta > 0.0)) throw std::invalid_argument("limit_magnetization: beta must be > 0");
  if (!(v1 > 0.0)) throw std::invalid_argument("limit_magnetization: v1 must be > 0");
  if (k == 0.0) return 0.0;
  const double bk = beta * k;
  if (std::abs(bk) > 350.0) {
    // sinh^2 would overflow; divide through by it instead.
    const double log_s2 = 2.0 * (std::abs(bk) - std::log(2.0));
    const double ratio = std::exp(-4.0 * beta * v1 - log_s2);
    return std::copysign(1.0 / std::sqrt(1.0 + ratio), k);
  }
  const double s = std::sinh(bk);
  return s / std::sqrt(s * s + std::exp(-4.0 * beta * v1));
}

}  // namespace polychain
