#pragma once

// Closed-form stability verdicts for the reference topologies.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcqn/builtin.hpp"
#include "mcqn/network.hpp"

namespace mcqn {

class TopologyMismatch : public InputError {
 public:
  using InputError::InputError;
};

enum class Verdict { Stable, Unstable, Indeterminate };

std::string_view verdict_name(Verdict v);

struct StabilityVerdict {
  Verdict verdict = Verdict::Indeterminate;
  std::string reason;
  std::vector<std::pair<std::string, double>> witness_values;

  double witness(std::string_view name) const;
};

/// Strict comparisons within this distance of equality are "boundary".
inline constexpr double kBoundaryTolerance = 1e-12;

/// alpha1 m2 + alpha3 m4: the load of the virtual station formed by
/// classes 2 and 4, which can never be in service at the same time.
/// Accepts krss and modified-krss (in any class labeling).
double virtual_station_intensity(const NetworkSpec& spec);

/// KRSS: stable iff rho < e and alpha1 m2 + alpha3 m4 < 1.
StabilityVerdict classify_krss(const NetworkSpec& spec);

/// Modified KRSS under rho < e and alpha1 m2 + alpha3 m4 > 1:
///   stable   if m5/(1-alpha7 m7) > m2 and m6/(1-alpha8 m8) > m4,
///   unstable if m5/(1-alpha7 m7) < m1 and m6/(1-alpha8 m8) < m3.
/// Anything else, including a virtual-station load below 1, is
/// Indeterminate. A station load >= 1 is Unstable (necessary condition).
StabilityVerdict classify_modified_krss(const NetworkSpec& spec);

/// Only the two proven instances: m = (0.1,0.6,0.1,0.6,0.7,0.027) with
/// alpha6 = 1.37 (stable) or alpha6 = 1 (unstable).
StabilityVerdict classify_modified_lk(const NetworkSpec& spec);

struct RateThresholds {
  double stabilizing;   // above this admission rate the regulator holds back traffic
  double destabilizing; // below this one it does not
};

struct Theorem1Thresholds {
  RateThresholds class7;
  RateThresholds class8;
};

/// Boundaries of the admission-rate conditions for classes 7 and 8:
/// class 7 gets ((1 - m5/m2)/m7, (1 - m5/m1)/m7), class 8 the analogue
/// with m6, m4, m3 and m8. Throws InputError when m7 or m8 is zero.
Theorem1Thresholds theorem1_thresholds(const NetworkSpec& spec);

/// Dispatches on the recognized topology. Any station load >= 1 is
/// Unstable for every topology; unrecognized networks are Indeterminate.
StabilityVerdict classify(const NetworkSpec& spec);

}  // namespace mcqn
