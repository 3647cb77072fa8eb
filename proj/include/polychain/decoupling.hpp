#pragma once

// Bijection between N-step walks on Z^2 and pairs of spin chains: each unit
// step X maps to the projections
//
//   sigma = <X, e1 - e2>,   sigma~ = <X, e1 + e2>,
//
// both in {-1, +1}. Under this map the polymer measure at inverse temperature
// beta with drift h factorizes exactly into two independent Ising chains at
// beta/2 with fields h1 = <h, e1 - e2> and h2 = <h, e1 + e2>, and
//
//   E ||S_N||^2 = (1/2) sum_{i,j} [ <s_i s_j>_{beta/2, h1} + <s_i s_j>_{beta/2, h2} ].

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>

#include "polychain/ising.hpp"
#include "polychain/polymer.hpp"
#include "polychain/rng.hpp"
#include "polychain/util.hpp"

namespace polychain {

struct SpinPair {
  SpinConfig sigma;
  SpinConfig sigma_tilde;
};

struct FieldPair {
  double h1 = 0.0;
  double h2 = 0.0;
};

inline FieldPair drift_to_fields(Vec2 h) { return {h.x - h.y, h.x + h.y}; }

inline std::pair<std::int8_t, std::int8_t> step_to_spins(Step s) {
  const IVec2 d = step_delta(s);
  return {static_cast<std::int8_t>(d.x - d.y), static_cast<std::int8_t>(d.x + d.y)};
}

inline Step spins_to_step(std::int8_t sigma, std::int8_t sigma_tilde) {
  // X = (sigma (e1 - e2) + sigma~ (e1 + e2)) / 2
  const int x = (sigma + sigma_tilde) / 2;
  const int y = (sigma_tilde - sigma) / 2;
  if (x == 1) return Step::PlusX;
  if (x == -1) return Step::MinusX;
  if (y == 1) return Step::PlusY;
  return Step::MinusY;
}

inline SpinPair walk_to_spins(const Walk& walk) {
  SpinPair pair;
  pair.sigma.reserve(walk.steps.size());
  pair.sigma_tilde.reserve(walk.steps.size());
  for (Step s : walk.steps) {
    const auto [a, b] = step_to_spins(s);
    pair.sigma.push_back(a);
    pair.sigma_tilde.push_back(b);
  }
  return pair;
}

inline Walk spins_to_walk(const SpinPair& pair) {
  if (pair.sigma.size() != pair.sigma_tilde.size())
    throw std::invalid_argument("spins_to_walk: chain lengths differ");
  Walk walk;
  walk.steps.reserve(pair.sigma.size());
  for (std::size_t i = 0; i < pair.sigma.size(); ++i) {
    walk.steps.push_back(spins_to_step(pair.sigma[i], pair.sigma_tilde[i]));
  }
  return walk;
}

// Parameters of the decoupled chain carrying field h1 (which == 0) or h2
// (which == 1): same couplings, inverse temperature beta/2.
inline IsingParams chain_params(const PolymerParams& params, int which) {
  const FieldPair fields = drift_to_fields(params.drift);
  return IsingParams(params.n_steps, 0.5 * params.beta, which == 0 ? fields.h1 : fields.h2,
                     params.couplings);
}

// Enumerates every walk and compares its polymer probability with the product
// of the two chain probabilities. Returns the largest absolute discrepancy.
inline double measure_factorization_check(const PolymerParams& params,
                                          int walk_cap = kDefaultWalkCap) {
  const PolymerEnsemble polymer(params, walk_cap);
  const IsingEnsemble chain1(chain_params(params, 0), walk_cap);
  const IsingEnsemble chain2(chain_params(params, 1), walk_cap);
  double worst = 0.0;
  for (std::uint64_t w = 0; w < polymer.size(); ++w) {
    const SpinPair pair = walk_to_spins(polymer.walk_at(w));
    const double p1 = std::exp(chain1.log_prob(pair.sigma));
    const double p2 = std::exp(chain2.log_prob(pair.sigma_tilde));
    worst = std::max(worst, std::abs(polymer.prob(w) - p1 * p2));
  }
  return worst;
}

// (1/2) sum_{i,j} [corr1_ij + corr2_ij]; with the chain correlation matrices
// at (beta/2, h1) and (beta/2, h2) this is E ||S_N||^2.
inline double msd_from_correlations(const SquareMatrix& corr1, const SquareMatrix& corr2) {
  if (corr1.size() != corr2.size())
    throw std::invalid_argument("msd_from_correlations: matrix sizes differ");
  return 0.5 * (corr1.sum() + corr2.sum());
}

// One polymer draw from two independent chain samplers. The sampler type must
// expose SpinConfig draw(std::mt19937_64&).
template <class Sampler>
Walk sample_polymer(Sampler& sigma_sampler, Sampler& tilde_sampler, std::mt19937_64& rng_sigma,
                    std::mt19937_64& rng_tilde) {
  SpinPair pair{sigma_sampler.draw(rng_sigma), tilde_sampler.draw(rng_tilde)};
  return spins_to_walk(pair);
}

// Exact polymer sampler: two enumeration-backed chain samplers on independent
// streams derived from one seed.
class ExactPolymerSampler {
 public:
  ExactPolymerSampler(const PolymerParams& params, std::uint64_t seed,
                      int walk_cap = kDefaultWalkCap)
      : sigma_sampler_(chain_params(params, 0), walk_cap),
        tilde_sampler_(chain_params(params, 1), walk_cap),
        rng_sigma_(make_engine(child_seed(seed, kLabelSigmaChain))),
        rng_tilde_(make_engine(child_seed(seed, kLabelTildeChain))) {}

  Walk draw() {
    return sample_polymer(sigma_sampler_, tilde_sampler_, rng_sigma_, rng_tilde_);
  }

 private:
  ExactIsingSampler sigma_sampler_;
  ExactIsingSampler tilde_sampler_;
  std::mt19937_64 rng_sigma_;
  std::mt19937_64 rng_tilde_;
};

}  // namespace polychain
