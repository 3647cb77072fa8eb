#pragma once

// Translation-invariant pair couplings V(r) for r = 1, 2, ... given either as
// a power law r^(-alpha) or as an explicit distance table.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace polychain {

enum class CouplingKind { PowerLaw, ExplicitTable };

struct CouplingSpec {
  CouplingKind kind = CouplingKind::PowerLaw;
  double alpha = 2.0;                    // exponent, power-law kind only
  std::map<int, double> table;           // distance -> coupling, table kind only
  int max_distance = kNoCutoff;          // couplings vanish beyond this

  static constexpr int kNoCutoff = std::numeric_limits<int>::max();

  static CouplingSpec power_law(double alpha, int max_distance = kNoCutoff) {
    if (!(alpha > 0.0)) throw std::invalid_argument("power-law coupling: alpha must be > 0");
    if (max_distance < 1) throw std::invalid_argument("coupling cutoff must be >= 1");
    CouplingSpec spec;
    spec.kind = CouplingKind::PowerLaw;
    spec.alpha = alpha;
    spec.max_distance = max_distance;
    return spec;
  }

  static CouplingSpec explicit_table(std::map<int, double> table) {
    for (const auto& [r, v] : table) {
      if (r < 1) throw std::invalid_argument("coupling table: distances must be >= 1");
      (void)v;
    }
    CouplingSpec spec;
    spec.kind = CouplingKind::ExplicitTable;
    spec.table = std::move(table);
    return spec;
  }

  static CouplingSpec nearest_neighbor(double j_coupling) {
    return explicit_table({{1, j_coupling}});
  }

  double value(int r) const {
    if (r < 1) throw std::invalid_argument("coupling distance must be >= 1");
    if (r > max_distance) return 0.0;
    if (kind == CouplingKind::PowerLaw) return std::pow(static_cast<double>(r), -alpha);
    auto it = table.find(r);
    return it == table.end() ? 0.0 : it->second;
  }

  // Distance-indexed table for a system of n sites; entry [r] holds V(r),
  // entry [0] is unused. Precomputed once so inner loops do O(1) lookups.
  std::vector<double> table_up_to(int n) const {
    std::vector<double> out(static_cast<std::size_t>(std::max(n, 1)), 0.0);
    for (int r = 1; r < n; ++r) out[static_cast<std::size_t>(r)] = value(r);
    return out;
  }

  // Sum over r of V(r) converges: power law needs alpha > 1 unless truncated;
  // explicit tables always have finite support.
  bool summable() const {
    if (kind == CouplingKind::ExplicitTable) return true;
    return alpha > 1.0 || max_distance != kNoCutoff;
  }

  bool strictly_positive_up_to(int n) const {
    for (int r = 1; r < n; ++r) {
      if (!(value(r) > 0.0)) return false;
    }
    return true;
  }

  // V(1) when the support is exactly {1}, i.e. a nearest-neighbor chain that
  // has an exact transfer-matrix treatment at any size.
  std::optional<double> nearest_neighbor_coupling() const {
    if (kind == CouplingKind::PowerLaw) {
      if (max_distance == 1) return value(1);
      return std::nullopt;
    }
    if (table.size() == 1 && table.count(1) == 1 && table.at(1) > 0.0 && max_distance >= 1) {
      return table.at(1);
    }
    return std::nullopt;
  }
};

}  // namespace polychain
