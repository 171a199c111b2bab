#pragma once

// Audit of a modified-KRSS fluid trajectory against the structure of the
// stability argument: classes 7 and 8 empty first (tau1), then classes 2
// and 4 (tau2), after which the station workload functions
//
//   W1 = m1 Q1 + m4 (Q3 + Q6)    f1 = m6 W1
//   W2 = m3 Q3 + m2 (Q1 + Q5)    f2 = m5 W2
//   W3 = m5 (Q1 + Q5)            f3 = m2 W3
//   W4 = m6 (Q3 + Q6)            f4 = m4 W4
//
// decrease strictly while their associated class is nonempty.

#include <optional>
#include <string>
#include <vector>

#include "mcqn/fluid.hpp"

namespace mcqn {

struct DriftReading {
  std::string name;
  /// (f index 1..4, canonical class 1..8) pairs checked by this reading.
  std::vector<std::pair<int, int>> pairs;
  std::size_t segments_checked = 0;
  std::size_t violations = 0;
  double worst_slope = -std::numeric_limits<double>::infinity();

  bool pass() const { return violations == 0; }
};

struct BoundaryComparison {
  std::string label;
  std::size_t evaluated = 0;
  std::size_t held = 0;
};

struct AuditReport {
  bool topology_ok = false;
  std::optional<double> tau1;
  std::optional<double> tau2;
  double tau1_bound = 0.0;
  bool tau1_within_bound = false;
  /// Station reading: f_i is tied to the lowest-priority class of station i
  /// (classes 1, 3, 5, 6). Class reading: f_i is tied to class i.
  DriftReading station_reading;
  DriftReading class_reading;
  std::vector<BoundaryComparison> boundary;  // reported only, never judged
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// Never throws for a malformed input; problems become report failures.
/// Pass/fail is decided by tau1 within its bound, tau2 being reached and
/// the station reading's drift checks.
AuditReport lyapunov_audit(const NetworkSpec& spec, const FluidTrajectory& trajectory);

}  // namespace mcqn
