#include <catch2/catch.hpp>

#include <cmath>

#include "polychain/ising.hpp"
#include "polychain/transfer_matrix.hpp"

using namespace polychain;

TEST_CASE("zero field gives zero magnetization at every site") {
  const NNChainParams params(7, 1.3, 0.8, 0.0);
  const NNObservables obs = nn_observables(params);
  for (double m : obs.magnetizations) CHECK(std::abs(m) < 1e-14);
}

TEST_CASE("two-spin pair correlation is tanh(beta J)") {
  const NNChainParams params(2, 1.0, 1.0, 0.0);
  const NNObservables obs = nn_observables(params);
  CHECK(obs.correlations.at(0, 1) == Approx(std::tanh(1.0)).epsilon(1e-13));
}

TEST_CASE("transfer matrix agrees with enumeration up to N=12") {
  struct Case {
    int n;
    double beta, j, k;
  };
  for (const Case& c : {Case{1, 1.0, 1.0, 0.7}, Case{2, 0.5, 1.2, -0.3}, Case{5, 2.0, 0.6, 0.2},
                        Case{8, 1.0, 1.0, 0.0}, Case{12, 0.7, 1.0, 0.3}}) {
    const NNChainParams nn(c.n, c.beta, c.j, c.k);
    const NNObservables obs = nn_observables(nn);
    const IsingParams ising(c.n, c.beta, c.k, CouplingSpec::nearest_neighbor(c.j));
    const IsingEnsemble exact(ising);

    CHECK(obs.log_z == Approx(exact.log_z()).margin(1e-12));
    const auto mags = exact.site_magnetizations();
    for (int i = 0; i < c.n; ++i)
      CHECK(obs.magnetizations[static_cast<std::size_t>(i)] ==
            Approx(mags[static_cast<std::size_t>(i)]).margin(1e-12));
    const SquareMatrix corr = exact.two_point();
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.n; ++j)
        CHECK(obs.correlations.at(i, j) == Approx(corr.at(i, j)).margin(1e-12));
  }
}

TEST_CASE("single-site helper matches the full pass") {
  const NNChainParams params(40, 1.0, 1.0, 0.25);
  const NNObservables obs = nn_observables(params);
  for (int i : {0, 7, 19, 39})
    CHECK(nn_site_magnetization(params, i) ==
          Approx(obs.magnetizations[static_cast<std::size_t>(i)]).margin(1e-13));
}

TEST_CASE("limit magnetization closed form") {
  CHECK(limit_magnetization(1.0, 1.0, 0.0) == 0.0);
  // v1 -> 0 collapses to tanh(beta k)
  CHECK(limit_magnetization(1.0, 1e-12, 1.0) == Approx(std::tanh(1.0)).margin(1e-9));
  // frozen from direct evaluation of sinh(bk)/sqrt(sinh^2(bk) + e^(-4 b v1))
  CHECK(limit_magnetization(1.0, 1.0, 1.0) == Approx(0.993434405321548).margin(1e-12));
  CHECK(limit_magnetization(1.0, 1.0, 0.5) == Approx(0.9678900962973307).margin(1e-12));
  CHECK(limit_magnetization(1.0, 1.0, 0.25) == Approx(0.881469430052625).margin(1e-12));
}

TEST_CASE("limit magnetization is odd in k and inside (-1, 1)") {
  for (double k : {0.1, 0.7, 2.0, 10.0}) {
    const double m = limit_magnetization(1.2, 0.8, k);
    CHECK(m == Approx(-limit_magnetization(1.2, 0.8, -k)).margin(1e-15));
    CHECK(m > 0.0);
    CHECK(m < 1.0);
  }
}

TEST_CASE("limit magnetization increases in k and in beta*v1") {
  double prev = 0.0;
  for (double k : {0.1, 0.3, 0.6, 1.0, 1.5}) {
    const double m = limit_magnetization(1.0, 1.0, k);
    CHECK(m > prev);
    prev = m;
  }
  prev = 0.0;
  for (double bv : {0.2, 0.5, 1.0, 1.8}) {
    const double m = limit_magnetization(bv, 1.0, 0.4);
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("midpoint magnetization converges monotonically to the limit") {
  struct Params {
    double beta, j, k;
  };
  for (const Params& p : {Params{1.0, 1.0, 0.25}, Params{1.0, 1.0, 1.0}, Params{0.1, 2.0, 0.5},
                          Params{2.0, 0.5, -1.0}, Params{0.5, 0.1, 0.1}}) {
    const double target = limit_magnetization(p.beta, p.j, p.k);
    double prev_gap = 1e9;
    for (int n : {50, 100, 200, 400}) {
      const NNChainParams params(n, p.beta, p.j, p.k);
      const double mid = nn_site_magnetization(params, (n + 1) / 2 - 1);
      const double gap = std::abs(mid - target);
      CHECK(gap <= prev_gap + 1e-15);
      prev_gap = gap;
      if (n == 400) CHECK(gap < 1e-6);
    }
  }
}

TEST_CASE("log partition stays finite on long cold chains") {
  const NNChainParams params(2000, 3.0, 1.5, 0.8);
  const double lz = nn_log_partition(params);
  CHECK(std::isfinite(lz));
  // Free energy per site is bounded below by the max Boltzmann exponent.
  CHECK(lz > 2000 * 3.0 * 1.5);
}

TEST_CASE("transfer-matrix parameter validation") {
  CHECK_THROWS_AS(NNChainParams(0, 1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NNChainParams(2, 0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NNChainParams(2, 1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NNChainParams(2, 1.0, 1.0, 1e9), std::invalid_argument);
  CHECK_THROWS_AS(limit_magnetization(-1.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(limit_magnetization(1.0, 0.0, 0.5), std::invalid_argument);
}
