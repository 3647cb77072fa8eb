#pragma once

// Origin-rooted nearest-neighbor paths on Z^2 under the Gibbs weight
//
//   P(S) = exp(-beta H(S)) / Z,
//   H(S) = - sum_{1<=i<j<=N} V(|i-j|) <X_i, X_j>  -  <h, S_N>,
//
// where X_i is the i-th unit step and S_N the endpoint. Note the drift term
// enters with a minus sign: h rewards displacement along h, and the fields of
// the two decoupled Ising chains come out as exactly h1 = <h, e1 - e2> and
// h2 = <h, e1 + e2> (see decoupling.hpp). Endpoint distances use the squared
// Euclidean norm, the choice under which ||S_N||^2 = sum_{i,j} <X_i, X_j>.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "polychain/couplings.hpp"
#include "polychain/util.hpp"

namespace polychain {

enum class Step : std::uint8_t { PlusX = 0, MinusX = 1, PlusY = 2, MinusY = 3 };

inline IVec2 step_delta(Step s) {
  switch (s) {
    case Step::PlusX: return {1, 0};
    case Step::MinusX: return {-1, 0};
    case Step::PlusY: return {0, 1};
    case Step::MinusY: return {0, -1};
  }
  return {0, 0};
}

inline int step_dot(Step a, Step b) {
  const IVec2 da = step_delta(a), db = step_delta(b);
  return da.x * db.x + da.y * db.y;
}

inline Step reversed(Step s) {
  switch (s) {
    case Step::PlusX: return Step::MinusX;
    case Step::MinusX: return Step::PlusX;
    case Step::PlusY: return Step::MinusY;
    case Step::MinusY: return Step::PlusY;
  }
  return s;
}

struct Walk {
  std::vector<Step> steps;

  int n_steps() const { return static_cast<int>(steps.size()); }

  IVec2 endpoint() const {
    IVec2 end;
    for (Step s : steps) {
      const IVec2 d = step_delta(s);
      end.x += d.x;
      end.y += d.y;
    }
    return end;
  }

  // S_0 = 0, S_1, ..., S_N
  std::vector<IVec2> positions() const {
    std::vector<IVec2> pos(steps.size() + 1);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const IVec2 d = step_delta(steps[i]);
      pos[i + 1] = {pos[i].x + d.x, pos[i].y + d.y};
    }
    return pos;
  }
};

struct PolymerParams {
  int n_steps;
  double beta;
  Vec2 drift;  // h
  CouplingSpec couplings;
  std::vector<double> coupling_table;

  PolymerParams(int n_steps_, double beta_, Vec2 drift_, CouplingSpec couplings_)
      : n_steps(n_steps_),
        beta(beta_),
        drift(drift_),
        couplings(std::move(couplings_)),
        coupling_table(couplings.table_up_to(n_steps_)) {
    if (n_steps < 1) throw std::invalid_argument("PolymerParams: n_steps must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("PolymerParams: beta must be finite and >= 0");
    if (!std::isfinite(drift.x) || !std::isfinite(drift.y))
      throw std::invalid_argument("PolymerParams: drift must be finite");
  }
};

inline double polymer_hamiltonian(const Walk& walk, const PolymerParams& params) {
  if (walk.n_steps() != params.n_steps)
    throw std::invalid_argument("polymer_hamiltonian: walk length does not match n_steps");
  const int n = params.n_steps;
  double pair_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int d = step_dot(walk.steps[static_cast<std::size_t>(i)],
                             walk.steps[static_cast<std::size_t>(j)]);
      if (d != 0) pair_sum += params.coupling_table[static_cast<std::size_t>(j - i)] * d;
    }
  }
  const IVec2 end = walk.endpoint();
  const double drift_term = params.drift.x * end.x + params.drift.y * end.y;
  return -pair_sum - drift_term;
}

inline constexpr int kDefaultWalkCap = 10;

// Walks of length n indexed 0 .. 4^n - 1, base-4 digits = steps.
inline Walk walk_from_index(std::uint64_t index, int n_steps) {
  Walk walk;
  walk.steps.resize(static_cast<std::size_t>(n_steps));
  for (int i = 0; i < n_steps; ++i) {
    walk.steps[static_cast<std::size_t>(i)] = static_cast<Step>((index >> (2 * i)) & 3u);
  }
  return walk;
}

inline std::uint64_t walk_index(const Walk& walk) {
  std::uint64_t index = 0;
  for (int i = 0; i < walk.n_steps(); ++i) {
    index |= static_cast<std::uint64_t>(walk.steps[static_cast<std::size_t>(i)]) << (2 * i);
  }
  return index;
}

// Exact Gibbs distribution over all 4^N walks.
class PolymerEnsemble {
 public:
  explicit PolymerEnsemble(PolymerParams params, int walk_cap = kDefaultWalkCap)
      : params_(std::move(params)) {
    if (params_.n_steps > walk_cap)
      throw std::invalid_argument("PolymerEnsemble: n_steps exceeds the walk enumeration cap");
    const std::uint64_t n_walks = std::uint64_t{1} << (2 * params_.n_steps);
    energies_.resize(n_walks);
    endpoints_.resize(n_walks);
    for (std::uint64_t w = 0; w < n_walks; ++w) {
      const Walk walk = walk_from_index(w, params_.n_steps);
      energies_[w] = polymer_hamiltonian(walk, params_);
      endpoints_[w] = walk.endpoint();
    }
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (double e : energies_) max_exponent = std::max(max_exponent, -params_.beta * e);
    probs_.resize(n_walks);
    double total = 0.0;
    for (std::uint64_t w = 0; w < n_walks; ++w) {
      probs_[w] = std::exp(-params_.beta * energies_[w] - max_exponent);
      total += probs_[w];
    }
    for (double& p : probs_) p /= total;
    log_z_ = max_exponent + std::log(total);
  }

  const PolymerParams& params() const { return params_; }
  std::uint64_t size() const { return probs_.size(); }
  double log_z() const { return log_z_; }
  double prob(std::uint64_t index) const { return probs_[index]; }
  double energy(std::uint64_t index) const { return energies_[index]; }
  IVec2 endpoint(std::uint64_t index) const { return endpoints_[index]; }
  Walk walk_at(std::uint64_t index) const { return walk_from_index(index, params_.n_steps); }

  // E ||S_N||^2 with the squared Euclidean endpoint norm.
  double mean_square_displacement() const {
    double acc = 0.0;
    for (std::uint64_t w = 0; w < probs_.size(); ++w) {
      const IVec2 e = endpoints_[w];
      acc += probs_[w] * (static_cast<double>(e.x) * e.x + static_cast<double>(e.y) * e.y);
    }
    return acc;
  }

  template <class F>
  double expectation(F&& f) const {
    double acc = 0.0;
    for (std::uint64_t w = 0; w < probs_.size(); ++w) {
      acc += probs_[w] * f(walk_at(w));
    }
    return acc;
  }

  // ln E[exp(beta t <S_N, v>)], evaluated with a max shift.
  double tilted_log_mgf(Vec2 v, double t) const {
    const double bt = params_.beta * t;
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (std::uint64_t w = 0; w < probs_.size(); ++w) {
      const IVec2 e = endpoints_[w];
      max_exponent = std::max(max_exponent, bt * (v.x * e.x + v.y * e.y));
    }
    double acc = 0.0;
    for (std::uint64_t w = 0; w < probs_.size(); ++w) {
      const IVec2 e = endpoints_[w];
      acc += probs_[w] * std::exp(bt * (v.x * e.x + v.y * e.y) - max_exponent);
    }
    return max_exponent + std::log(acc);
  }

 private:
  PolymerParams params_;
  std::vector<double> energies_;
  std::vector<IVec2> endpoints_;
  std::vector<double> probs_;
  double log_z_ = 0.0;
};

inline double exact_msd(const PolymerParams& params, int walk_cap = kDefaultWalkCap) {
  return PolymerEnsemble(params, walk_cap).mean_square_displacement();
}

}  // namespace polychain
