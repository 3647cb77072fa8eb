#include <catch2/catch.hpp>

#include "polychain/couplings.hpp"

using namespace polychain;

TEST_CASE("power-law couplings evaluate r^(-alpha)") {
  const auto spec = CouplingSpec::power_law(1.5);
  CHECK(spec.value(1) == Approx(1.0));
  CHECK(spec.value(2) == Approx(std::pow(2.0, -1.5)));
  CHECK(spec.value(100) == Approx(std::pow(100.0, -1.5)));
  CHECK_THROWS_AS(spec.value(0), std::invalid_argument);
  CHECK_THROWS_AS(CouplingSpec::power_law(0.0), std::invalid_argument);
}

TEST_CASE("explicit tables vanish off support") {
  const auto spec = CouplingSpec::explicit_table({{1, 1.0}, {3, 0.25}});
  CHECK(spec.value(1) == 1.0);
  CHECK(spec.value(2) == 0.0);
  CHECK(spec.value(3) == 0.25);
  CHECK(spec.value(4) == 0.0);
  CHECK_THROWS_AS(CouplingSpec::explicit_table({{0, 1.0}}), std::invalid_argument);
}

TEST_CASE("cutoff truncates a power law") {
  const auto spec = CouplingSpec::power_law(1.5, 2);
  CHECK(spec.value(2) > 0.0);
  CHECK(spec.value(3) == 0.0);
}

TEST_CASE("summability rule") {
  CHECK(CouplingSpec::power_law(1.5).summable());
  CHECK(CouplingSpec::power_law(3.0).summable());
  CHECK_FALSE(CouplingSpec::power_law(0.9).summable());
  CHECK(CouplingSpec::power_law(0.9, 50).summable());  // truncated: finite support
  CHECK(CouplingSpec::explicit_table({{1, 1.0}, {7, 2.0}}).summable());
}

TEST_CASE("positivity check respects cutoffs and tables") {
  CHECK(CouplingSpec::power_law(2.0).strictly_positive_up_to(100));
  CHECK_FALSE(CouplingSpec::power_law(2.0, 3).strictly_positive_up_to(10));
  CHECK(CouplingSpec::explicit_table({{1, 1.0}}).strictly_positive_up_to(2));
  CHECK_FALSE(CouplingSpec::explicit_table({{1, 1.0}}).strictly_positive_up_to(3));
  CHECK_FALSE(CouplingSpec::explicit_table({{1, -1.0}}).strictly_positive_up_to(2));
}

TEST_CASE("nearest-neighbor detection") {
  CHECK(CouplingSpec::nearest_neighbor(1.0).nearest_neighbor_coupling() == 1.0);
  CHECK(CouplingSpec::power_law(1.5, 1).nearest_neighbor_coupling() == 1.0);
  CHECK_FALSE(CouplingSpec::power_law(1.5).nearest_neighbor_coupling().has_value());
  CHECK_FALSE(CouplingSpec::explicit_table({{1, 1.0}, {2, 0.1}})
                  .nearest_neighbor_coupling()
                  .has_value());
}

TEST_CASE("distance table precompute matches value()") {
  const auto spec = CouplingSpec::power_law(2.5);
  const auto table = spec.table_up_to(8);
  REQUIRE(table.size() == 8);
  for (int r = 1; r < 8; ++r) CHECK(table[static_cast<std::size_t>(r)] == spec.value(r));
}
