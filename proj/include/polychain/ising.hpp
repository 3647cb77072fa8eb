#pragma once

// Finite 1D Ising chain with arbitrary translation-invariant couplings, free
// boundary conditions and a uniform field:
//
//   H(s) = - sum_{1<=i<j<=N} V(|i-j|) s_i s_j - k sum_i s_i
//
// plus brute-force observables obtained by enumerating all 2^N spin
// configurations. These enumerations are the oracle of record for every
// sampler and transfer-matrix result in the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "polychain/couplings.hpp"
#include "polychain/util.hpp"

namespace polychain {

// Spins are exactly -1 or +1.
using SpinConfig = std::vector<std::int8_t>;

struct IsingParams {
  int n_sites;
  double beta;   // inverse temperature, >= 0
  double field;  // uniform external field k
  CouplingSpec couplings;
  std::vector<double> coupling_table;  // [r] = V(r), precomputed at construction

  IsingParams(int n_sites_, double beta_, double field_, CouplingSpec couplings_)
      : n_sites(n_sites_),
        beta(beta_),
        field(field_),
        couplings(std::move(couplings_)),
        coupling_table(couplings.table_up_to(n_sites_)) {
    if (n_sites < 1) throw std::invalid_argument("IsingParams: n_sites must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("IsingParams: beta must be finite and >= 0");
    if (!std::isfinite(field)) throw std::invalid_argument("IsingParams: field must be finite");
  }
};

// Energy of one configuration, pair sum in ascending (i, j) order so results
// are bit-reproducible run to run.
inline double ising_hamiltonian(const SpinConfig& config, const IsingParams& params) {
  if (static_cast<int>(config.size()) != params.n_sites)
    throw std::invalid_argument("ising_hamiltonian: config length does not match n_sites");
  const int n = params.n_sites;
  double pair_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      pair_sum += params.coupling_table[static_cast<std::size_t>(j - i)] *
                  static_cast<double>(config[static_cast<std::size_t>(i)]) *
                  static_cast<double>(config[static_cast<std::size_t>(j)]);
    }
  }
  double spin_sum = 0.0;
  for (int i = 0; i < n; ++i) spin_sum += static_cast<double>(config[static_cast<std::size_t>(i)]);
  return -pair_sum - params.field * spin_sum;
}

inline constexpr int kDefaultSiteCap = 20;

// All 2^N configurations with their exact Gibbs probabilities. Weights are
// max-shifted before exponentiation so large beta never overflows.
class IsingEnsemble {
 public:
  explicit IsingEnsemble(IsingParams params, int enumeration_cap = kDefaultSiteCap)
      : params_(std::move(params)) {
    if (params_.n_sites > enumeration_cap)
      throw std::invalid_argument("IsingEnsemble: n_sites exceeds the enumeration cap");
    const std::uint64_t n_states = std::uint64_t{1} << params_.n_sites;
    energies_.resize(n_states);
    SpinConfig config(static_cast<std::size_t>(params_.n_sites));
    for (std::uint64_t s = 0; s < n_states; ++s) {
      decode(s, config);
      energies_[s] = ising_hamiltonian(config, params_);
    }
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (double e : energies_) max_exponent = std::max(max_exponent, -params_.beta * e);
    probs_.resize(n_states);
    double total = 0.0;
    for (std::uint64_t s = 0; s < n_states; ++s) {
      probs_[s] = std::exp(-params_.beta * energies_[s] - max_exponent);
      total += probs_[s];
    }
    for (double& p : probs_) p /= total;
    log_z_ = max_exponent + std::log(total);
  }

  const IsingParams& params() const { return params_; }
  std::uint64_t size() const { return probs_.size(); }
  double log_z() const { return log_z_; }
  double energy(std::uint64_t state) const { return energies_[state]; }
  double prob(std::uint64_t state) const { return probs_[state]; }

  double log_prob(const SpinConfig& config) const {
    return -params_.beta * ising_hamiltonian(config, params_) - log_z_;
  }

  SpinConfig config_at(std::uint64_t state) const {
    SpinConfig config(static_cast<std::size_t>(params_.n_sites));
    decode(state, config);
    return config;
  }

  // <f> over the Gibbs measure; states visited in ascending index order.
  template <class F>
  double expectation(F&& f) const {
    SpinConfig config(static_cast<std::size_t>(params_.n_sites));
    double acc = 0.0;
    for (std::uint64_t s = 0; s < probs_.size(); ++s) {
      decode(s, config);
      acc += probs_[s] * f(config);
    }
    return acc;
  }

  std::vector<double> site_magnetizations() const {
    const int n = params_.n_sites;
    std::vector<double> mags(static_cast<std::size_t>(n), 0.0);
    SpinConfig config(static_cast<std::size_t>(n));
    for (std::uint64_t s = 0; s < probs_.size(); ++s) {
      decode(s, config);
      for (int i = 0; i < n; ++i)
        mags[static_cast<std::size_t>(i)] += probs_[s] * config[static_cast<std::size_t>(i)];
    }
    return mags;
  }

  // Matrix of <s_i s_j>; symmetric with unit diagonal, entries in [-1, 1].
  SquareMatrix two_point() const {
    const int n = params_.n_sites;
    SquareMatrix m(n);
    SpinConfig config(static_cast<std::size_t>(n));
    for (std::uint64_t s = 0; s < probs_.size(); ++s) {
      decode(s, config);
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          m.at(i, j) += probs_[s] * config[static_cast<std::size_t>(i)] *
                        config[static_cast<std::size_t>(j)];
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      m.at(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) m.at(j, i) = m.at(i, j);
    }
    return m;
  }

 private:
  void decode(std::uint64_t state, SpinConfig& config) const {
    for (int i = 0; i < params_.n_sites; ++i)
      config[static_cast<std::size_t>(i)] = (state >> i) & 1u ? 1 : -1;
  }

  IsingParams params_;
  std::vector<double> energies_;
  std::vector<double> probs_;
  double log_z_ = 0.0;
};

inline double log_partition(const IsingParams& params, int enumeration_cap = kDefaultSiteCap) {
  return IsingEnsemble(params, enumeration_cap).log_z();
}

template <class F>
double exact_expectation(const IsingParams& params, F&& f,
                         int enumeration_cap = kDefaultSiteCap) {
  return IsingEnsemble(params, enumeration_cap).expectation(std::forward<F>(f));
}

inline SquareMatrix two_point_matrix(const IsingParams& params,
                                     int enumeration_cap = kDefaultSiteCap) {
  return IsingEnsemble(params, enumeration_cap).two_point();
}

// Exact sampler backed by the enumerated distribution (inverse CDF).
class ExactIsingSampler {
 public:
  explicit ExactIsingSampler(IsingParams params, int enumeration_cap = kDefaultSiteCap)
      : ensemble_(std::move(params), enumeration_cap), cdf_(ensemble_.size()) {
    double acc = 0.0;
    for (std::uint64_t s = 0; s < ensemble_.size(); ++s) {
      acc += ensemble_.prob(s);
      cdf_[s] = acc;
    }
    cdf_.back() = 1.0;
  }

  const IsingEnsemble& ensemble() const { return ensemble_; }

  SpinConfig draw(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::uint64_t state = static_cast<std::uint64_t>(it - cdf_.begin());
    if (state >= ensemble_.size()) state = ensemble_.size() - 1;
    return ensemble_.config_at(state);
  }

 private:
  IsingEnsemble ensemble_;
  std::vector<double> cdf_;
};

}  // namespace polychain
