#pragma once

// Piecewise-linear solutions of the priority fluid network
//
//   Q(t) = Q(0) + alpha t - (I - P') D T(t) >= 0,   D = diag(mu)
//   T nondecreasing,  Y_k(t) = t - sum_{l in H_k} T_l(t) nondecreasing,
//   Y_k increases only while Q_l = 0 for every l in H_k.
//
// Between breakpoints every class is served at a constant rate dT/dt = u.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcqn/network.hpp"

namespace mcqn {

inline constexpr double kZeroLevel = 1e-12;
inline constexpr double kZeroDerivative = 1e-14;
inline constexpr double kAllocationTolerance = 1e-12;
inline constexpr int kAllocationMaxSweeps = 10'000;
inline constexpr std::size_t kBreakpointBudget = 1'000'000;

struct RateAllocation {
  Vector rates;     // u_k = dT_k/dt in [0, 1]
  Vector residual;  // per station: 1 - sum of its class rates
  /// Number of classes whose rate had to be pinned to break an oscillating
  /// fixed-point iteration (0 when plain iteration converged).
  int pinned = 0;
};

/// Raised when no consistent allocation is found. Carries the last iterate.
class AllocationInconclusive : public std::runtime_error {
 public:
  AllocationInconclusive(const std::string& what, Vector last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  Vector last_iterate;
};

class BreakpointBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves the work-conserving priority allocation at levels `q`.
///
/// Gauss-Seidel sweeps over stations in index order and their classes in
/// priority order, starting from u = 0. A class with positive level takes
/// the whole residual capacity r; an empty class takes min(inflow/mu, r).
/// If the sweeps settle into a cycle (several consistent allocations exist,
/// as at the symmetric states of KRSS-type networks) the first oscillating
/// class is pinned to one of its cycle values and the rest re-solved; a
/// pin is kept only if the pinned rate is itself consistent.
RateAllocation allocation_rates(const NetworkSpec& spec, const Vector& q);

/// dQ/dt = alpha + P'(mu .* u) - mu .* u.
Vector level_derivative(const NetworkSpec& spec, const Vector& rates);

struct FluidState {
  double t = 0.0;
  Vector levels;      // Q
  Vector allocated;   // cumulative T
};

struct AdvanceResult {
  FluidState next;
  RateAllocation allocation;  // rates on [state.t, next.t]
  Vector derivative;
  double dt = 0.0;                     // +inf when no level ever reaches zero
  std::vector<std::size_t> emptied;    // classes that hit zero at next.t
};

/// Moves `state` to the first time a positive level reaches zero, or by
/// `max_dt` if that comes first. Levels within kZeroLevel of zero are
/// clamped to zero.
AdvanceResult fluid_advance(const NetworkSpec& spec, const FluidState& state,
                            double max_dt = std::numeric_limits<double>::infinity());

enum class FluidOutcome { Emptied, Diverging, HorizonReached };

std::string_view fluid_outcome_name(FluidOutcome o);

struct Breakpoint {
  FluidState state;
  Vector rates;        // allocation on the following segment
  std::string event;   // "start", "empty:k[+l...]", "emptied", "diverging", "horizon"
};

struct FluidTrajectory {
  std::vector<Breakpoint> breakpoints;
  FluidOutcome outcome = FluidOutcome::HorizonReached;
  double emptied_at = 0.0;  // meaningful when outcome == Emptied
  double divergence_threshold = 0.0;

  const FluidState& final_state() const { return breakpoints.back().state; }
};

/// Chains fluid_advance from `q0` until the network is empty with zero
/// drift (Emptied), the total level exceeds 10 max(|q0|_1, 1) (Diverging),
/// or `horizon` is reached.
FluidTrajectory fluid_solve(const NetworkSpec& spec, const Vector& q0, double horizon,
                            std::size_t breakpoint_budget = kBreakpointBudget);

/// |Q(t) - Q(0) - alpha t + (I - P') D T(t)|_inf at one state.
double flow_balance_residual(const NetworkSpec& spec, const Vector& q0, const FluidState& s);

/// Bound on |dQ/dt|_inf for any fluid solution: |alpha|_1 + sum_k mu_k.
double lipschitz_bound(const NetworkSpec& spec);

enum class ProbeVerdict { Stable, Diverging, Inconclusive };

std::string_view probe_verdict_name(ProbeVerdict v);

struct ProbeSample {
  std::string label;   // "simplex:i", "axis:k", "corner:k+l", "perturb:k+l"
  Vector q0;
  FluidOutcome outcome;
  double emptied_at;
  std::size_t breakpoints;
};

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::Inconclusive;
  double max_emptying_time = 0.0;
  std::vector<ProbeSample> samples;
};

inline constexpr double kProbePerturbation = 1e-3;

/// Solves from `n_samples` uniform points of the unit simplex, the K axis
/// states, the K corner midpoints (e_k + e_{k+1})/2, and eps (e_k + e_l)
/// for every pair of classes at different stations. Stable iff every run
/// empties; Diverging if any run diverges.
ProbeResult stability_probe(const NetworkSpec& spec, std::size_t n_samples, double horizon,
                            std::uint64_t seed,
                            std::vector<FluidTrajectory>* trajectories = nullptr);

}  // namespace mcqn
