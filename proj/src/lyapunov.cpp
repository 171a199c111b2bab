#include "mcqn/lyapunov.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mcqn/builtin.hpp"

namespace mcqn {

namespace {

constexpr double kDriftTolerance = 1e-12;
constexpr double kCompareTolerance = 1e-12;

// First breakpoint index from which every listed class stays at zero.
// A run consisting only of the terminal breakpoint of a trajectory that did
// not empty is not permanent and does not count.
std::optional<std::size_t> zero_suffix(const FluidTrajectory& traj,
                                       const std::vector<std::size_t>& classes) {
  const auto& bps = traj.breakpoints;
  std::size_t start = bps.size();
  while (start > 0) {
    const auto& levels = bps[start - 1].state.levels;
    bool zero = true;
    for (std::size_t k : classes)
      if (levels[static_cast<Eigen::Index>(k)] > kZeroLevel) zero = false;
    if (!zero) break;
    --start;
  }
  if (start == bps.size()) return std::nullopt;
  if (start + 1 == bps.size() && traj.outcome != FluidOutcome::Emptied) return std::nullopt;
  return start;
}

}  // namespace

AuditReport lyapunov_audit(const NetworkSpec& spec, const FluidTrajectory& trajectory) {
  AuditReport report;
  report.station_reading.name = "station (f_i with lowest class of station i)";
  report.station_reading.pairs = {{1, 1}, {2, 3}, {3, 5}, {4, 6}};
  report.class_reading.name = "class (f_i with class i)";
  report.class_reading.pairs = {{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  report.boundary = {{"f1 <= f4 if Q1 = 0"}, {"f2 <= f3 if Q3 = 0"},
                     {"f3 <= f2 if Q5 = 0"}, {"f4 <= f4 if Q6 = 0"}};

  const auto match = match_topology(spec, Topology::ModifiedKrss);
  if (!match) {
    report.failures.push_back("topology mismatch: not a modified KRSS network");
    return report;
  }
  report.topology_ok = true;
  if (trajectory.breakpoints.empty()) {
    report.failures.push_back("empty trajectory");
    return report;
  }
  const NetworkSpec s = canonical_view(spec, *match);
  auto cls = [&](int canonical) { return match->class_of[static_cast<std::size_t>(canonical - 1)]; };
  auto level = [&](const Breakpoint& bp, int canonical) {
    return bp.state.levels[static_cast<Eigen::Index>(cls(canonical))];
  };
  auto m = [&](int k) { return s.mean_service[k - 1]; };

  // tau1 bound, scaled by the initial mass (the bound is stated for |Q(0)| = 1).
  const double mu7 = 1.0 / m(7), mu8 = 1.0 / m(8);
  const double a7 = s.arrival_rates[6], a8 = s.arrival_rates[7];
  const double q0_norm = trajectory.breakpoints.front().state.levels.sum();
  report.tau1_bound = (a7 < mu7 && a8 < mu8)
                          ? q0_norm * std::max(1.0 / (mu7 - a7), 1.0 / (mu8 - a8))
                          : std::numeric_limits<double>::infinity();

  const auto& bps = trajectory.breakpoints;
  const auto tau1_index = zero_suffix(trajectory, {cls(7), cls(8)});
  // The second phase starts no earlier than the first.
  auto tau2_index = zero_suffix(trajectory, {cls(2), cls(4)});
  if (tau1_index && tau2_index) tau2_index = std::max(*tau1_index, *tau2_index);
  if (!tau1_index) tau2_index.reset();
  if (tau1_index) {
    report.tau1 = bps[*tau1_index].state.t;
    report.tau1_within_bound = *report.tau1 <= report.tau1_bound * (1.0 + 1e-9) + 1e-12;
    if (!report.tau1_within_bound) report.failures.push_back("tau1 exceeds its bound");
  } else {
    report.failures.push_back("phase tau1 never reached");
  }
  if (!tau2_index) {
    report.failures.push_back("phase tau2 never reached");
    return report;
  }
  report.tau2 = bps[*tau2_index].state.t;

  auto f_values = [&](const Breakpoint& bp) {
    const double w1 = m(1) * level(bp, 1) + m(4) * (level(bp, 3) + level(bp, 6));
    const double w2 = m(3) * level(bp, 3) + m(2) * (level(bp, 1) + level(bp, 5));
    const double w3 = m(5) * (level(bp, 1) + level(bp, 5));
    const double w4 = m(6) * (level(bp, 3) + level(bp, 6));
    return std::array<double, 4>{m(6) * w1, m(5) * w2, m(2) * w3, m(4) * w4};
  };

  for (std::size_t i = *tau2_index; i + 1 < bps.size(); ++i) {
    const double dt = bps[i + 1].state.t - bps[i].state.t;
    if (!(dt > 0.0)) continue;
    const auto f0 = f_values(bps[i]);
    const auto f1 = f_values(bps[i + 1]);
    for (DriftReading* reading : {&report.station_reading, &report.class_reading}) {
      for (auto [fi, k] : reading->pairs) {
        const bool positive = std::max(level(bps[i], k), level(bps[i + 1], k)) > kZeroLevel;
        if (!positive) continue;
        const double slope = (f1[fi - 1] - f0[fi - 1]) / dt;
        ++reading->segments_checked;
        reading->worst_slope = std::max(reading->worst_slope, slope);
        if (!(slope < -kDriftTolerance)) ++reading->violations;
      }
    }
  }

  static constexpr std::array<std::array<int, 3>, 4> kComparisons{
      {{1, 4, 1}, {2, 3, 3}, {3, 2, 5}, {4, 4, 6}}};  // f_a <= f_b when Q_k = 0
  for (std::size_t i = *tau2_index; i < bps.size(); ++i) {
    const auto f = f_values(bps[i]);
    for (std::size_t c = 0; c < kComparisons.size(); ++c) {
      const auto [fa, fb, k] = kComparisons[c];
      if (level(bps[i], k) > kZeroLevel) continue;
      ++report.boundary[c].evaluated;
      if (f[static_cast<std::size_t>(fa - 1)] <= f[static_cast<std::size_t>(fb - 1)] + kCompareTolerance)
        ++report.boundary[c].held;
    }
  }

  if (!report.station_reading.pass())
    report.failures.push_back("drift check failed on " +
                              std::to_string(report.station_reading.violations) + " segment(s)");
  return report;
}

}  // namespace mcqn
