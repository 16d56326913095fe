#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opf/pwlcost.hpp"

namespace opf {

/// Complex quantity in per-unit.
struct ComplexPU {
  double re = 0.0;
  double im = 0.0;
  bool operator==(const ComplexPU&) const = default;
};

enum class BusType { PQ = 1, PV = 2, Reference = 3, Isolated = 4 };

struct Bus {
  int id = 0;
  BusType type = BusType::PQ;
  double vmin = 0.9;
  double vmax = 1.1;
  ComplexPU demand;  ///< S^d in p.u.
  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  ComplexPU series_impedance;  ///< r + jx
  double charging = 0.0;       ///< total line-charging susceptance
  double tap_ratio = 0.0;      ///< 0 means 1.0
  double rate = 0.0;           ///< apparent-power limit (MVA / base), 0 = unlimited
  double angmin = 0.0;         ///< radians
  double angmax = 0.0;         ///< radians
  /// At least one angle bound was absent in the data and took the default.
  bool angle_bounds_defaulted = false;

  double tap() const { return tap_ratio == 0.0 ? 1.0 : tap_ratio; }
  bool has_thermal_limit() const { return rate > 0.0; }
  bool operator==(const Branch&) const = default;
};

struct Generator {
  int bus = 0;
  double pmin = 0.0;  ///< p.u.
  double pmax = 0.0;
  double qmin = 0.0;
  double qmax = 0.0;
  CostSpec cost;
  bool operator==(const Generator&) const = default;
};

/// Default angle-difference bound used when a branch carries none.
inline constexpr double kDefaultAngleBound = 0.5235987755982988;  // 30 degrees

/// Power network in per-unit on `base_mva`.
///
/// Buses are addressed by position in `buses`; `bus_index()` resolves ids.
/// `gens_at_bus()[i]` lists generator positions attached to bus position i.
/// References to absent buses are kept as-is and reported by
/// `validate_network`; they are left out of the lookup tables.
class Network {
 public:
  Network() = default;
  Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
          std::vector<Generator> generators);

  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Generator>& generators() const { return generators_; }
  const std::vector<std::vector<std::size_t>>& gens_at_bus() const { return gens_at_bus_; }

  /// Position of bus `id`, or -1 when absent.
  int bus_index(int id) const;
  /// Position of the angle reference bus, or -1 for an empty network.
  int reference_bus() const { return reference_bus_; }
  /// True when the reference bus came from a type-3 bus.
  bool reference_from_data() const { return reference_from_data_; }

  bool operator==(const Network& o) const {
    return base_mva_ == o.base_mva_ && buses_ == o.buses_ && branches_ == o.branches_ &&
           generators_ == o.generators_;
  }

 private:
  double base_mva_ = 100.0;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Generator> generators_;
  std::vector<std::vector<std::size_t>> gens_at_bus_;
  std::unordered_map<int, int> bus_pos_;
  int reference_bus_ = -1;
  bool reference_from_data_ = false;
};

/// Parses the supported subset of the Matpower case format.
Network parse_case(std::string_view text);
Network read_case_file(const std::string& path);

/// Writes a case that `parse_case` maps back to an identical Network.
std::string write_case(const Network& net, std::string_view name = "case");

/// MW value whose per-unit conversion is exactly `pu`.
double to_engineering(double pu, double base);

/// Series admittance 1 / (r + jx). Throws SingularBranch on zero impedance.
ComplexPU branch_admittance(const Branch& b);

enum class Severity { Warning, Error };

struct Finding {
  Severity severity;
  std::string message;
};

std::vector<Finding> validate_network(const Network& net);
bool has_errors(const std::vector<Finding>& findings);

}  // namespace opf
