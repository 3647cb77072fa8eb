#pragma once

// Metropolis single-spin-flip sampling of the long-range Ising chain, with a
// precomputed coupling table, cached per-site fields, batch-means errors and
// independent replicas. Estimators for chain observables, the polymer mean
// square displacement via the decoupling map, and the small-field
// spontaneous-magnetization probe.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polychain/decoupling.hpp"
#include "polychain/ising.hpp"
#include "polychain/rng.hpp"
#include "polychain/stats.hpp"
#include "polychain/util.hpp"

namespace polychain {

// Cache drift beyond tolerance, or energy bookkeeping gone bad. Aborts the
// run rather than averaging over a corrupted state.
class invariant_error : public std::runtime_error {
 public:
  invariant_error(const std::string& what, long sweep) : std::runtime_error(what), sweep_index(sweep) {}
  long sweep_index;
};

enum class ChainInit { Random, AlignedUp };

struct McmcPlan {
  long n_sweeps = 10000;   // total sweeps including burn-in
  long burn_in = 1000;
  int thinning = 1;        // measure every this many post-burn-in sweeps
  int n_replicas = 1;
  std::uint64_t seed = 1;
  int batch_count = 16;
  long check_interval = 1000;  // cache consistency check cadence, in sweeps
  ChainInit init = ChainInit::Random;

  void validate() const {
    if (burn_in < 0 || n_sweeps <= burn_in)
      throw std::invalid_argument("McmcPlan: need n_sweeps > burn_in >= 0");
    if (thinning < 1) throw std::invalid_argument("McmcPlan: thinning must be >= 1");
    if (n_replicas < 1) throw std::invalid_argument("McmcPlan: n_replicas must be >= 1");
    if (batch_count < 8) throw std::invalid_argument("McmcPlan: batch_count must be >= 8");
    if (check_interval < 1) throw std::invalid_argument("McmcPlan: check_interval must be >= 1");
    if (measurements_per_replica() < batch_count)
      throw std::invalid_argument("McmcPlan: fewer measurements per replica than batches");
  }

  long measurements_per_replica() const { return (n_sweeps - burn_in) / thinning; }
};

struct ChainState {
  SpinConfig spins;
  std::vector<double> local_fields;  // [i] = sum_{j != i} V(|i-j|) s_j
  double energy = 0.0;
  long sweep_count = 0;
};

inline void recompute_caches(ChainState& state, const IsingParams& params) {
  const int n = params.n_sites;
  state.local_fields.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double f = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      f += params.coupling_table[static_cast<std::size_t>(std::abs(i - j))] *
           static_cast<double>(state.spins[static_cast<std::size_t>(j)]);
    }
    state.local_fields[static_cast<std::size_t>(i)] = f;
  }
  state.energy = ising_hamiltonian(state.spins, params);
}

inline ChainState make_chain_state(const IsingParams& params, std::mt19937_64& rng,
                                   ChainInit init = ChainInit::Random) {
  ChainState state;
  state.spins.resize(static_cast<std::size_t>(params.n_sites));
  if (init == ChainInit::AlignedUp) {
    for (auto& s : state.spins) s = 1;
  } else {
    std::uniform_int_distribution<int> coin(0, 1);
    for (auto& s : state.spins) s = coin(rng) == 0 ? -1 : 1;
  }
  recompute_caches(state, params);
  return state;
}

inline void check_consistency(ChainState& state, const IsingParams& params,
                              double rel_tol = 1e-8) {
  ChainState fresh;
  fresh.spins = state.spins;
  recompute_caches(fresh, params);
  const double energy_scale = std::max(1.0, std::abs(fresh.energy));
  if (std::abs(fresh.energy - state.energy) > rel_tol * energy_scale)
    throw invariant_error("chain energy cache drifted beyond tolerance", state.sweep_count);
  for (std::size_t i = 0; i < fresh.local_fields.size(); ++i) {
    const double scale = std::max(1.0, std::abs(fresh.local_fields[i]));
    if (std::abs(fresh.local_fields[i] - state.local_fields[i]) > rel_tol * scale)
      throw invariant_error("chain local-field cache drifted beyond tolerance",
                            state.sweep_count);
  }
  // Resync so rounding cannot accumulate across checks.
  state.local_fields = std::move(fresh.local_fields);
  state.energy = fresh.energy;
}

// One sweep = N proposals at uniformly random sites. Flip i has
// dE = 2 s_i (f_i + k) and acceptance min(1, exp(-beta dE)); an accepted flip
// updates every cached field in O(N). Returns the number of accepted flips.
inline int metropolis_sweep(ChainState& state, const IsingParams& params, std::mt19937_64& rng) {
  const int n = params.n_sites;
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int accepted = 0;
  for (int prop = 0; prop < n; ++prop) {
    const int i = pick(rng);
    const double si = static_cast<double>(state.spins[static_cast<std::size_t>(i)]);
    const double delta_e = 2.0 * si * (state.local_fields[static_cast<std::size_t>(i)] + params.field);
    bool accept = delta_e <= 0.0;
    if (!accept) accept = unit(rng) < std::exp(-params.beta * delta_e);
    if (!accept) continue;
    const std::int8_t flipped = static_cast<std::int8_t>(-state.spins[static_cast<std::size_t>(i)]);
    state.spins[static_cast<std::size_t>(i)] = flipped;
    state.energy += delta_e;
    const double two_s = 2.0 * static_cast<double>(flipped);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      state.local_fields[static_cast<std::size_t>(j)] +=
          two_s * params.coupling_table[static_cast<std::size_t>(std::abs(i - j))];
    }
    ++accepted;
  }
  ++state.sweep_count;
  return accepted;
}

// Optional per-replica trace row.
using TraceSink = std::function<void(long sweep, double energy, double magnetization)>;

// Drives one replica: burn-in, thinned measurements, periodic cache checks.
// sink(state) is called at every measurement sweep.
template <class Sink>
void run_replica_measurements(const IsingParams& params, const McmcPlan& plan,
                              std::uint64_t replica_seed, Sink&& sink,
                              const TraceSink& trace = {}) {
  auto rng = make_engine(replica_seed);
  ChainState state = make_chain_state(params, rng, plan.init);
  for (long sweep = 1; sweep <= plan.n_sweeps; ++sweep) {
    metropolis_sweep(state, params, rng);
    if (sweep % plan.check_interval == 0) check_consistency(state, params);
    if (sweep > plan.burn_in && (sweep - plan.burn_in) % plan.thinning == 0) {
      sink(state);
      if (trace) {
        double m = 0.0;
        for (auto s : state.spins) m += s;
        trace(sweep, state.energy, m / static_cast<double>(params.n_sites));
      }
    }
  }
}

struct Observable {
  std::string name;
  std::function<double(const SpinConfig&)> eval;
};

struct ChainRunResult {
  std::map<std::string, EstimateWithError> estimates;
  bool converged = true;
};

// Independent replicas from child seeds, batch-means errors per replica,
// fixed-order pooling. Output is a function of (params, plan) alone, not of
// the thread count.
inline ChainRunResult run_chain(const IsingParams& params, const McmcPlan& plan,
                                std::span<const Observable> observables, int threads = 1,
                                const std::function<TraceSink(int replica)>& trace_factory = {}) {
  plan.validate();
  const std::size_t n_obs = observables.size();
  std::vector<std::vector<BatchMeansResult>> per_obs(n_obs);
  for (auto& v : per_obs) v.resize(static_cast<std::size_t>(plan.n_replicas));

  parallel_for(static_cast<std::size_t>(plan.n_replicas), threads, [&](std::size_t r) {
    std::vector<std::vector<double>> series(n_obs);
    for (auto& s : series) s.reserve(static_cast<std::size_t>(plan.measurements_per_replica()));
    TraceSink trace = trace_factory ? trace_factory(static_cast<int>(r)) : TraceSink{};
    run_replica_measurements(
        params, plan, child_seed(plan.seed, kLabelReplica, r),
        [&](const ChainState& state) {
          for (std::size_t k = 0; k < n_obs; ++k)
            series[k].push_back(observables[k].eval(state.spins));
        },
        trace);
    for (std::size_t k = 0; k < n_obs; ++k)
      per_obs[k][r] = batch_means(series[k], plan.batch_count);
  });

  ChainRunResult result;
  for (std::size_t k = 0; k < n_obs; ++k) {
    EstimateWithError est = pool_replicas(per_obs[k]);
    if (!replicas_mixed(est)) result.converged = false;
    result.estimates[observables[k].name] = est;
  }
  return result;
}

struct MsdPoint {
  int n_steps = 0;
  EstimateWithError msd;
  bool converged = true;
};

// E ||S_N||^2 for each N: two independent chains at (beta/2, h1) and
// (beta/2, h2) advance in lockstep; each measurement converts the spin pair
// to a walk and records the squared endpoint norm.
inline std::vector<MsdPoint> estimate_msd_curve(const CouplingSpec& couplings,
                                                double polymer_beta, Vec2 drift,
                                                std::span<const int> n_list,
                                                const McmcPlan& plan, int threads = 1) {
  plan.validate();
  std::vector<MsdPoint> points(n_list.size());
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    const int n = n_list[idx];
    const PolymerParams polymer(n, polymer_beta, drift, couplings);
    const IsingParams chain1 = chain_params(polymer, 0);
    const IsingParams chain2 = chain_params(polymer, 1);
    const std::uint64_t point_seed = child_seed(plan.seed, kLabelTask, idx);

    std::vector<BatchMeansResult> replicas(static_cast<std::size_t>(plan.n_replicas));
    parallel_for(static_cast<std::size_t>(plan.n_replicas), threads, [&](std::size_t r) {
      const std::uint64_t replica_seed = child_seed(point_seed, kLabelReplica, r);
      auto rng1 = make_engine(child_seed(replica_seed, kLabelSigmaChain));
      auto rng2 = make_engine(child_seed(replica_seed, kLabelTildeChain));
      ChainState s1 = make_chain_state(chain1, rng1);
      ChainState s2 = make_chain_state(chain2, rng2);
      std::vector<double> series;
      series.reserve(static_cast<std::size_t>(plan.measurements_per_replica()));
      for (long sweep = 1; sweep <= plan.n_sweeps; ++sweep) {
        metropolis_sweep(s1, chain1, rng1);
        metropolis_sweep(s2, chain2, rng2);
        if (sweep % plan.check_interval == 0) {
          check_consistency(s1, chain1);
          check_consistency(s2, chain2);
        }
        if (sweep > plan.burn_in && (sweep - plan.burn_in) % plan.thinning == 0) {
          const Walk walk = spins_to_walk({s1.spins, s2.spins});
          const IVec2 e = walk.endpoint();
          series.push_back(static_cast<double>(e.x) * e.x + static_cast<double>(e.y) * e.y);
        }
      }
      replicas[r] = batch_means(series, plan.batch_count);
    });

    points[idx].n_steps = n;
    points[idx].msd = pool_replicas(replicas);
    points[idx].converged = replicas_mixed(points[idx].msd);
  }
  return points;
}

struct MagnetizationProbe {
  EstimateWithError small_field;    // <M/N> at k = epsilon
  EstimateWithError abs_zero_field; // <|M|/N> at k = 0
  double epsilon = 0.0;
};

// Spontaneous-magnetization surrogate: magnetization at a small positive
// field plus the |m| estimator at zero field. The small-field run starts from
// the field-aligned state: at strong coupling a random start can wedge a
// replica in the metastable well, which single-flip dynamics cannot leave on
// any useful timescale, and the probe targets the field-selected phase.
inline MagnetizationProbe estimate_spontaneous_magnetization(const CouplingSpec& couplings,
                                                             double beta, int n,
                                                             const McmcPlan& plan,
                                                             double epsilon = 0.01,
                                                             int threads = 1) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("estimate_spontaneous_magnetization: epsilon must be > 0");
  if (!couplings.strictly_positive_up_to(n))
    throw std::invalid_argument(
        "estimate_spontaneous_magnetization: couplings must be strictly positive");
  const auto mean_spin = [](const SpinConfig& s) {
    double m = 0.0;
    for (auto v : s) m += v;
    return m / static_cast<double>(s.size());
  };
  const auto abs_mean_spin = [mean_spin](const SpinConfig& s) { return std::abs(mean_spin(s)); };

  MagnetizationProbe probe;
  probe.epsilon = epsilon;
  {
    McmcPlan field_plan = plan;
    field_plan.init = ChainInit::AlignedUp;
    const IsingParams params(n, beta, epsilon, couplings);
    const Observable obs{"m", mean_spin};
    probe.small_field =
        run_chain(params, field_plan, std::span<const Observable>(&obs, 1), threads)
            .estimates.at("m");
  }
  {
    McmcPlan zero_plan = plan;
    zero_plan.seed = child_seed(plan.seed, kLabelTask, 1);
    const IsingParams params(n, beta, 0.0, couplings);
    const Observable obs{"abs_m", abs_mean_spin};
    probe.abs_zero_field =
        run_chain(params, zero_plan, std::span<const Observable>(&obs, 1), threads)
            .estimates.at("abs_m");
  }
  return probe;
}

// Metropolis-backed sampler with the draw() interface of ExactIsingSampler:
// owns a chain, warms it up on first use, then advances `stride` sweeps per
// draw.
class MetropolisIsingSampler {
 public:
  MetropolisIsingSampler(IsingParams params, long warmup, int stride)
      : params_(std::move(params)), warmup_(warmup), stride_(stride) {
    if (warmup < 0 || stride < 1)
      throw std::invalid_argument("MetropolisIsingSampler: need warmup >= 0, stride >= 1");
  }

  SpinConfig draw(std::mt19937_64& rng) {
    if (!state_) {
      state_ = make_chain_state(params_, rng);
      for (long i = 0; i < warmup_; ++i) metropolis_sweep(*state_, params_, rng);
    }
    for (int i = 0; i < stride_; ++i) metropolis_sweep(*state_, params_, rng);
    return state_->spins;
  }

 private:
  IsingParams params_;
  long warmup_;
  int stride_;
  std::optional<ChainState> state_;
};

}  // namespace polychain
