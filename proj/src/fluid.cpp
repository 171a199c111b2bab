#include "mcqn/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "mcqn/rng.hpp"

namespace mcqn {

namespace {

constexpr std::size_t kCycleWindow = 16;
constexpr double kPinConsistency = 1e-10;
constexpr std::size_t kModeEnumerationLimit = 20;

struct InflowTerm {
  std::size_t from;
  double weight;  // p(from, k) * mu(from)
};

// Per-spec data reused by every allocation solve.
struct AllocationModel {
  const NetworkSpec& spec;
  Vector mu;
  std::vector<std::vector<std::size_t>> stations;  // classes, highest priority first
  std::vector<std::vector<InflowTerm>> inflows;

  explicit AllocationModel(const NetworkSpec& s)
      : spec(s), mu(s.service_rates()), stations(station_priority_lists(s)), inflows(s.num_classes()) {
    const auto k_count = static_cast<Eigen::Index>(s.num_classes());
    for (Eigen::Index from = 0; from < k_count; ++from)
      for (Eigen::Index to = 0; to < k_count; ++to)
        if (s.routing(from, to) != 0.0)
          inflows[static_cast<std::size_t>(to)].push_back(
              {static_cast<std::size_t>(from), s.routing(from, to) * mu[from]});
  }

  double inflow(std::size_t k, const Vector& u) const {
    double total = spec.arrival_rates[static_cast<Eigen::Index>(k)];
    for (const auto& term : inflows[k]) total += term.weight * u[static_cast<Eigen::Index>(term.from)];
    return total;
  }

  // Rate class k would take given the current iterate and residual r.
  double update(std::size_t k, double residual, const Vector& q, const Vector& u) const {
    const auto i = static_cast<Eigen::Index>(k);
    if (q[i] > kZeroLevel) return residual;
    return std::clamp(inflow(k, u) / mu[i], 0.0, residual);
  }

  void sweep(const Vector& q, Vector& u, const std::vector<std::optional<double>>& pins) const {
    for (const auto& classes : stations) {
      double residual = 1.0;
      for (std::size_t k : classes) {
        const auto i = static_cast<Eigen::Index>(k);
        u[i] = pins[k] ? *pins[k] : update(k, residual, q, u);
        residual = std::max(0.0, residual - u[i]);
      }
    }
  }

  bool pins_consistent(const Vector& q, const Vector& u,
                       const std::vector<std::optional<double>>& pins) const {
    for (const auto& classes : stations) {
      double residual = 1.0;
      for (std::size_t k : classes) {
        const auto i = static_cast<Eigen::Index>(k);
        if (pins[k] && std::abs(update(k, residual, q, u) - u[i]) > kPinConsistency) return false;
        residual = std::max(0.0, residual - u[i]);
      }
    }
    return true;
  }

  std::vector<std::size_t> sweep_order() const {
    std::vector<std::size_t> order;
    for (const auto& classes : stations) order.insert(order.end(), classes.begin(), classes.end());
    return order;
  }
};

struct SolveState {
  int sweeps_used = 0;
  Vector last;
};

// Returns the converged allocation, or nullopt when every pin choice below
// this level led to an inconsistent answer.
std::optional<Vector> solve_pinned(const AllocationModel& model, const Vector& q,
                                   std::vector<std::optional<double>>& pins, SolveState& st,
                                   int& pinned_count) {
  const auto k_count = static_cast<Eigen::Index>(model.spec.num_classes());
  Vector u = Vector::Zero(k_count);
  for (Eigen::Index i = 0; i < k_count; ++i)
    if (pins[static_cast<std::size_t>(i)]) u[i] = *pins[static_cast<std::size_t>(i)];

  std::vector<Vector> history;
  while (st.sweeps_used < kAllocationMaxSweeps) {
    Vector before = u;
    model.sweep(q, u, pins);
    ++st.sweeps_used;
    st.last = u;
    if ((u - before).cwiseAbs().maxCoeff() <= kAllocationTolerance) {
      if (model.pins_consistent(q, u, pins)) return u;
      return std::nullopt;
    }

    // Look for u repeating an earlier iterate: the sweeps are cycling.
    std::size_t period = 0;
    for (std::size_t back = 1; back <= history.size(); ++back) {
      if ((u - history[history.size() - back]).cwiseAbs().maxCoeff() <= kAllocationTolerance) {
        period = back;
        break;
      }
    }
    history.push_back(u);
    if (history.size() > kCycleWindow) history.erase(history.begin());
    if (period == 0) continue;

    const std::vector<Vector> cycle(history.end() - static_cast<std::ptrdiff_t>(period) - 1,
                                    history.end() - 1);
    for (std::size_t k : model.sweep_order()) {
      if (pins[k]) continue;
      const auto i = static_cast<Eigen::Index>(k);
      std::vector<double> values;
      for (const auto& v : cycle) values.push_back(v[i]);
      std::sort(values.begin(), values.end(), std::greater<>());
      values.erase(std::unique(values.begin(), values.end(),
                               [](double a, double b) { return std::abs(a - b) <= kAllocationTolerance; }),
                   values.end());
      if (values.size() < 2) continue;
      for (double candidate : values) {
        pins[k] = candidate;
        ++pinned_count;
        if (auto solved = solve_pinned(model, q, pins, st, pinned_count)) return solved;
        --pinned_count;
        if (st.sweeps_used >= kAllocationMaxSweeps) break;
      }
      pins[k].reset();
      return std::nullopt;
    }
    return std::nullopt;
  }
  return std::nullopt;
}

// Exact fallback: each empty class either takes its residual or passes its
// inflow through. Fixing that choice makes the allocation a linear system.
std::optional<Vector> solve_by_modes(const AllocationModel& model, const Vector& q) {
  const NetworkSpec& spec = model.spec;
  const auto k_count = static_cast<Eigen::Index>(spec.num_classes());
  std::vector<std::size_t> empty;
  for (std::size_t k = 0; k < spec.num_classes(); ++k)
    if (!(q[static_cast<Eigen::Index>(k)] > kZeroLevel)) empty.push_back(k);
  if (empty.size() > kModeEnumerationLimit) return std::nullopt;

  std::vector<bool> through(spec.num_classes(), false);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << empty.size()); ++mask) {
    for (std::size_t e = 0; e < empty.size(); ++e) through[empty[e]] = (mask >> e) & 1U;
    Matrix a = Matrix::Zero(k_count, k_count);
    Vector b = Vector::Zero(k_count);
    for (const auto& classes : model.stations) {
      for (std::size_t pos = 0; pos < classes.size(); ++pos) {
        const auto i = static_cast<Eigen::Index>(classes[pos]);
        if (through[classes[pos]]) {
          a(i, i) = model.mu[i];
          for (const auto& term : model.inflows[classes[pos]])
            a(i, static_cast<Eigen::Index>(term.from)) -= term.weight;
          b[i] = spec.arrival_rates[i];
        } else {
          for (std::size_t h = 0; h <= pos; ++h) a(i, static_cast<Eigen::Index>(classes[h])) = 1.0;
          b[i] = 1.0;
        }
      }
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) continue;
    Vector u = lu.solve(b);
    bool ok = true;
    for (const auto& classes : model.stations) {
      double residual = 1.0;
      for (std::size_t k : classes) {
        const auto i = static_cast<Eigen::Index>(k);
        if (u[i] < -kPinConsistency || u[i] > residual + kPinConsistency) ok = false;
        if (!through[k] && !(q[i] > kZeroLevel) && model.inflow(k, u) / model.mu[i] < residual - kPinConsistency)
          ok = false;
        residual -= u[i];
      }
    }
    if (ok) return u.cwiseMax(0.0).cwiseMin(1.0);
  }
  return std::nullopt;
}

std::string join_classes(const std::vector<std::size_t>& classes) {
  std::string out;
  for (std::size_t k : classes) out += (out.empty() ? "" : "+") + std::to_string(k + 1);
  return out;
}

}  // namespace

RateAllocation allocation_rates(const NetworkSpec& spec, const Vector& q) {
  const AllocationModel model(spec);
  std::vector<std::optional<double>> pins(spec.num_classes());
  SolveState st;
  int pinned = 0;
  auto solved = solve_pinned(model, q, pins, st, pinned);
  if (!solved) {
    pinned = 0;
    solved = solve_by_modes(model, q);
  }
  if (!solved)
    throw AllocationInconclusive("rate allocation did not reach a consistent fixed point after " +
                                     std::to_string(st.sweeps_used) + " sweeps",
                                 st.last);

  RateAllocation out;
  out.rates = std::move(*solved);
  out.pinned = pinned;
  out.residual = Vector::Ones(static_cast<Eigen::Index>(spec.num_stations));
  for (std::size_t k = 0; k < spec.num_classes(); ++k)
    out.residual[static_cast<Eigen::Index>(spec.station_of[k])] -= out.rates[static_cast<Eigen::Index>(k)];
  return out;
}

Vector level_derivative(const NetworkSpec& spec, const Vector& rates) {
  const Vector outflow = spec.service_rates().cwiseProduct(rates);
  return spec.arrival_rates + spec.routing.transpose() * outflow - outflow;
}

AdvanceResult fluid_advance(const NetworkSpec& spec, const FluidState& state, double max_dt) {
  AdvanceResult r;
  r.allocation = allocation_rates(spec, state.levels);
  r.derivative = level_derivative(spec, r.allocation.rates);

  const Eigen::Index k_count = state.levels.size();
  double hit = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < k_count; ++k) {
    if (state.levels[k] > kZeroLevel && r.derivative[k] < -kZeroDerivative)
      hit = std::min(hit, state.levels[k] / -r.derivative[k]);
  }

  r.dt = std::min(hit, max_dt);
  r.next = state;
  if (!std::isfinite(r.dt)) return r;

  r.next.t = state.t + r.dt;
  r.next.levels = state.levels + r.derivative * r.dt;
  r.next.allocated = state.allocated + r.allocation.rates * r.dt;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const bool draining = state.levels[k] > kZeroLevel && r.derivative[k] < -kZeroDerivative;
    if (draining && hit <= max_dt && state.levels[k] / -r.derivative[k] <= hit * (1.0 + 1e-12)) {
      r.next.levels[k] = 0.0;
      r.emptied.push_back(static_cast<std::size_t>(k));
    }
    if (r.next.levels[k] <= kZeroLevel) r.next.levels[k] = 0.0;
  }
  return r;
}

std::string_view fluid_outcome_name(FluidOutcome o) {
  switch (o) {
    case FluidOutcome::Emptied: return "Emptied";
    case FluidOutcome::Diverging: return "Diverging";
    case FluidOutcome::HorizonReached: return "HorizonReached";
  }
  return "?";
}

FluidTrajectory fluid_solve(const NetworkSpec& spec, const Vector& q0, double horizon,
                            std::size_t breakpoint_budget) {
  if (q0.size() != static_cast<Eigen::Index>(spec.num_classes()))
    throw InputError("initial levels have length " + std::to_string(q0.size()) + ", expected " +
                     std::to_string(spec.num_classes()));
  if ((q0.array() < 0.0).any() || !q0.allFinite())
    throw InputError("initial levels must be finite and nonnegative");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be positive and finite");

  FluidTrajectory traj;
  traj.divergence_threshold = 10.0 * std::max(q0.sum(), 1.0);

  FluidState state;
  state.levels = q0.unaryExpr([](double x) { return x <= kZeroLevel ? 0.0 : x; });
  state.allocated = Vector::Zero(q0.size());
  std::string event = "start";

  while (true) {
    if (traj.breakpoints.size() >= breakpoint_budget)
      throw BreakpointBudgetExceeded("fluid solve exceeded " + std::to_string(breakpoint_budget) +
                                     " breakpoints at t = " + std::to_string(state.t));

    AdvanceResult adv = fluid_advance(spec, state, horizon - state.t);
    traj.breakpoints.push_back({state, adv.allocation.rates, event});

    const bool empty = (state.levels.array() == 0.0).all();
    if (empty && adv.derivative.cwiseAbs().maxCoeff() <= kZeroDerivative) {
      traj.breakpoints.back().event = "emptied";
      traj.outcome = FluidOutcome::Emptied;
      traj.emptied_at = state.t;
      return traj;
    }

    const double total = state.levels.sum();
    const double growth = adv.derivative.sum();
    if (growth > 0.0) {
      const double to_threshold = (traj.divergence_threshold - total) / growth;
      if (to_threshold <= adv.dt) {
        FluidState cross = state;
        cross.t += to_threshold;
        cross.levels = (state.levels + adv.derivative * to_threshold).cwiseMax(0.0);
        cross.allocated += adv.allocation.rates * to_threshold;
        traj.breakpoints.push_back({cross, adv.allocation.rates, "diverging"});
        traj.outcome = FluidOutcome::Diverging;
        return traj;
      }
    }

    if (!std::isfinite(adv.dt)) {
      // Unreachable for finite horizons: max_dt bounds the step.
      throw InputError("fluid segment without end before the horizon");
    }
    state = std::move(adv.next);
    if (adv.emptied.empty() || state.t >= horizon) {
      state.t = std::min(state.t, horizon);
      traj.breakpoints.push_back({state, allocation_rates(spec, state.levels).rates, "horizon"});
      traj.outcome = FluidOutcome::HorizonReached;
      return traj;
    }
    event = "empty:" + join_classes(adv.emptied);
  }
}

double flow_balance_residual(const NetworkSpec& spec, const Vector& q0, const FluidState& s) {
  const Eigen::Index k_count = q0.size();
  const Matrix transfer = Matrix::Identity(k_count, k_count) - spec.routing.transpose();
  const Vector predicted =
      q0 + spec.arrival_rates * s.t - transfer * spec.service_rates().cwiseProduct(s.allocated);
  return (s.levels - predicted).cwiseAbs().maxCoeff();
}

double lipschitz_bound(const NetworkSpec& spec) {
  return spec.arrival_rates.cwiseAbs().sum() + spec.service_rates().sum();
}

std::string_view probe_verdict_name(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::Stable: return "Stable";
    case ProbeVerdict::Diverging: return "Diverging";
    case ProbeVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

ProbeResult stability_probe(const NetworkSpec& spec, std::size_t n_samples, double horizon,
                            std::uint64_t seed, std::vector<FluidTrajectory>* trajectories) {
  const std::size_t k_count = spec.num_classes();
  const auto kk = static_cast<Eigen::Index>(k_count);
  std::vector<std::pair<std::string, Vector>> starts;

  Rng rng(seed);
  for (std::size_t i = 0; i < n_samples; ++i) {
    // Normalized i.i.d. exponentials are uniform on the simplex.
    Vector q(kk);
    for (Eigen::Index k = 0; k < kk; ++k) q[k] = -std::log(rng.uniform_open_low());
    starts.emplace_back("simplex:" + std::to_string(i + 1), q / q.sum());
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    Vector q = Vector::Zero(kk);
    q[static_cast<Eigen::Index>(k)] = 1.0;
    starts.emplace_back("axis:" + std::to_string(k + 1), q);
  }
  if (k_count > 1) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t l = (k + 1) % k_count;
      Vector q = Vector::Zero(kk);
      q[static_cast<Eigen::Index>(k)] = 0.5;
      q[static_cast<Eigen::Index>(l)] = 0.5;
      starts.emplace_back("corner:" + std::to_string(k + 1) + "+" + std::to_string(l + 1), q);
    }
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t l = k + 1; l < k_count; ++l) {
      if (spec.station_of[k] == spec.station_of[l]) continue;
      Vector q = Vector::Zero(kk);
      q[static_cast<Eigen::Index>(k)] = kProbePerturbation;
      q[static_cast<Eigen::Index>(l)] = kProbePerturbation;
      starts.emplace_back("perturb:" + std::to_string(k + 1) + "+" + std::to_string(l + 1), q);
    }
  }

  ProbeResult result;
  bool all_emptied = true;
  bool any_diverged = false;
  for (auto& [label, q0] : starts) {
    FluidTrajectory traj = fluid_solve(spec, q0, horizon);
    result.samples.push_back({label, q0, traj.outcome, traj.emptied_at, traj.breakpoints.size()});
    if (traj.outcome == FluidOutcome::Emptied)
      result.max_emptying_time = std::max(result.max_emptying_time, traj.emptied_at);
    else
      all_emptied = false;
    if (traj.outcome == FluidOutcome::Diverging) any_diverged = true;
    if (trajectories) trajectories->push_back(std::move(traj));
  }
  result.verdict = any_diverged  ? ProbeVerdict::Diverging
                   : all_emptied ? ProbeVerdict::Stable
                                 : ProbeVerdict::Inconclusive;
  return result;
}

}  // namespace mcqn
