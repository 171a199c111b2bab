#include <doctest.h>

#include "mcqn/builtin.hpp"
#include "mcqn/fluid.hpp"
#include "oracles.hpp"

using namespace mcqn;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

FluidState state_at(const Vector& q) { return {0.0, q, Vector::Zero(q.size())}; }

}  // namespace

TEST_SUITE("fluid") {

TEST_CASE("single class drains at full rate") {
  const auto a = allocation_rates(oracle::mm1(0.0, 1.0), vec({1.0}));
  CHECK(a.rates[0] == 1.0);
  CHECK(level_derivative(oracle::mm1(0.0, 1.0), a.rates)[0] == -1.0);
}

TEST_CASE("high priority class takes the whole station") {
  const NetworkSpec s = oracle::make_spec(1, {0, 0}, {1, 1}, {0, 0}, {1, 2});
  for (double q2 : {0.0, 0.5, 3.0}) {
    const auto a = allocation_rates(s, vec({1.0, q2}));
    CHECK(a.rates[0] == 1.0);
    CHECK(a.rates[1] == 0.0);
  }
}

TEST_CASE("regulator gets only leftover capacity once 7 and 8 are empty") {
  const NetworkSpec s = modified_krss_family(8.0 / 9.0);
  const auto a = allocation_rates(s, vec({0, 0, 0, 0, 0.3, 0.4, 0, 0}));
  CHECK(a.rates[6] == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
  CHECK(a.rates[5] == doctest::Approx(1.0 - 8.0 / 9.0).epsilon(1e-12));
  CHECK(a.rates[4] == doctest::Approx(1.0 - 8.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("symmetric krss state resolves to a consistent allocation") {
  const NetworkSpec s = modified_krss_family(1.0 / 3.0);
  const auto a = allocation_rates(s, Vector::Zero(8));
  for (Eigen::Index k = 0; k < 8; ++k) {
    CHECK(a.rates[k] >= 0.0);
    CHECK(a.rates[k] <= 1.0);
  }
  CHECK(a.residual.minCoeff() >= -1e-12);
}

TEST_CASE("unstable gauss-seidel map falls back to exact modes") {
  // Class 5 above class 6 at station 3 turns the 6 -> 1 -> 5 loop into a
  // map with gain mu6/mu5 at a unique interior fixed point.
  NetworkSpec s = modified_lk_family(1.0);
  s.priority[4] = 5;
  s.priority[5] = 6;
  const auto a = allocation_rates(s, vec({0, 0, 0, 0, 0, 0.5}));
  const Vector mu = s.service_rates();
  CHECK(a.rates[4] + a.rates[5] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(mu[4] * a.rates[4] == doctest::Approx(mu[0] * a.rates[0]).epsilon(1e-10));
  CHECK(mu[0] * a.rates[0] == doctest::Approx(mu[5] * a.rates[5]).epsilon(1e-10));
}

TEST_CASE("advance: single class empties at 1/(1-rho)") {
  const auto r = fluid_advance(oracle::mm1(0.5, 1.0), state_at(vec({1.0})));
  CHECK(r.next.t == doctest::Approx(2.0));
  CHECK(r.next.levels[0] == 0.0);
}

TEST_CASE("advance: two classes, one station") {
  const NetworkSpec s = oracle::make_spec(1, {0, 0}, {0.5, 0.5}, {0, 0}, {1, 2});
  const auto r = fluid_advance(s, state_at(vec({1.0, 1.0})));
  CHECK(r.next.t == doctest::Approx(0.5));
  CHECK(r.next.levels[0] == 0.0);
  CHECK(r.next.levels[1] == doctest::Approx(1.0));
}

TEST_CASE("advance: empty feasible network stays empty") {
  const NetworkSpec s = builtin_network(Topology::Krss, {std::vector<double>{1, 0, 1, 0}, std::vector<double>{0.2, 0.4, 0.2, 0.4}});
  const auto r = fluid_advance(s, state_at(Vector::Zero(4)));
  CHECK(r.derivative.cwiseAbs().maxCoeff() <= kZeroDerivative);
  CHECK(std::isinf(r.dt));
}

TEST_CASE("solve from zero is Emptied at time zero") {
  const auto t = fluid_solve(modified_krss_family(8.0 / 9.0), Vector::Zero(8), 100.0);
  CHECK(t.outcome == FluidOutcome::Emptied);
  CHECK(t.emptied_at == 0.0);
}

TEST_CASE("modified krss from a unit random start empties") {
  const NetworkSpec s = modified_krss_family(8.0 / 9.0);
  const auto t = fluid_solve(s, oracle::random_levels(3, 8, 1.0), 1e4);
  CHECK(t.outcome == FluidOutcome::Emptied);
  CHECK(t.emptied_at > 0.0);
  CHECK(t.emptied_at < 1e4);
}

TEST_CASE("modified krss at 1/3 from the perturbed state grows linearly") {
  const NetworkSpec s = modified_krss_family(1.0 / 3.0);
  const auto t = fluid_solve(s, vec({0, 1e-3, 0, 1e-3, 0, 0, 0, 0}), 1e4);
  CHECK(t.outcome == FluidOutcome::Diverging);
  // The total at the ends of successive cycles grows by a common factor,
  // and cycle length is proportional to size, so growth is linear in t.
  std::vector<std::pair<double, double>> peaks;
  for (const auto& bp : t.breakpoints)
    if (bp.event == "empty:3" || bp.event == "empty:1") peaks.emplace_back(bp.state.t, bp.state.levels.sum());
  REQUIRE(peaks.size() >= 4);
  const auto n = peaks.size();
  const double r1 = peaks[n - 1].second / peaks[n - 3].second;
  const double r2 = peaks[n - 2].second / peaks[n - 4].second;
  CHECK(r1 == doctest::Approx(r2).epsilon(1e-6));
  CHECK(r1 > 1.0);
  const double s1 = peaks[n - 1].second / peaks[n - 1].first, s2 = peaks[n - 3].second / peaks[n - 3].first;
  CHECK(s1 == doctest::Approx(s2).epsilon(0.05));
}

TEST_CASE("krss with a virtual station overload diverges from any 2/4 mass") {
  const NetworkSpec s = builtin_network(Topology::Krss);
  REQUIRE(s.arrival_rates[0] * s.mean_service[1] + s.arrival_rates[2] * s.mean_service[3] > 1.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Vector q = oracle::random_levels(seed, 4, 1.0);
    if (seed % 3 == 0) q = vec({0, 1e-3, 0, 0});
    const auto t = fluid_solve(s, q, 1e4);
    CHECK(t.outcome == FluidOutcome::Diverging);
  }
}

TEST_CASE("budget exhaustion is an error") {
  CHECK_THROWS_AS(fluid_solve(modified_krss_family(1.0 / 3.0), vec({0, 1, 0, 1, 0, 0, 0, 0}), 1e4, 5),
                  BreakpointBudgetExceeded);
}

TEST_CASE("solver invariants on random feedforward instances") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    const NetworkSpec s = oracle::random_feedforward(seed);
    const Vector q0 = oracle::random_levels(seed + 1000, static_cast<Eigen::Index>(s.num_classes()), 2.0);
    const auto t = fluid_solve(s, q0, 1e4);
    CHECK(t.outcome == FluidOutcome::Emptied);
    for (const auto& bp : t.breakpoints) CHECK(flow_balance_residual(s, q0, bp.state) <= 1e-9);
    CHECK(oracle::complementarity_holds(s, t, 1e-9));
    CHECK(oracle::idleness_monotone(s, t, 1e-9));
    const double delta = lipschitz_bound(s);
    for (std::size_t i = 0; i + 1 < t.breakpoints.size(); ++i) {
      const double dt = t.breakpoints[i + 1].state.t - t.breakpoints[i].state.t;
      if (dt <= 0.0) continue;
      const Vector slope = (t.breakpoints[i + 1].state.levels - t.breakpoints[i].state.levels) / dt;
      CHECK(slope.cwiseAbs().maxCoeff() <= delta * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("scale invariance") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const NetworkSpec s = oracle::random_feedforward(seed);
    const Vector q0 = oracle::random_levels(seed + 7, static_cast<Eigen::Index>(s.num_classes()), 2.0);
    const auto base = fluid_solve(s, q0, 1e4);
    for (double c : {0.5, 2.0, 10.0}) {
      const auto scaled = fluid_solve(s, c * q0, c * 1e4);
      CHECK(scaled.outcome == base.outcome);
      CHECK(scaled.emptied_at == doctest::Approx(c * base.emptied_at).epsilon(1e-10));
      for (const auto& bp : base.breakpoints) {
        const Vector diff = oracle::levels_at(scaled, c * bp.state.t) - c * bp.state.levels;
        CHECK(diff.cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
  }
}

TEST_CASE("probe examples") {
  const auto stable = stability_probe(modified_krss_family(8.0 / 9.0), 100, 1e4, 42);
  CHECK(stable.verdict == ProbeVerdict::Stable);
  CHECK(stable.max_emptying_time > 0.0);
  CHECK(stable.samples.size() >= 100 + 2 * 8);
  CHECK(stability_probe(modified_krss_family(1.0 / 3.0), 20, 1e4, 42).verdict == ProbeVerdict::Diverging);
}

TEST_CASE("probe is deterministic in its seed") {
  const NetworkSpec s = modified_krss_family(8.0 / 9.0);
  const auto a = stability_probe(s, 10, 1e4, 5);
  const auto b = stability_probe(s, 10, 1e4, 5);
  const auto c = stability_probe(s, 10, 1e4, 6);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].emptied_at == b.samples[i].emptied_at);
  CHECK((a.samples[0].q0 - c.samples[0].q0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("probe reports an undecided run as inconclusive") {
  // A critically loaded queue neither empties nor grows.
  const NetworkSpec s = oracle::mm1(1.0, 1.0);
  CHECK(stability_probe(s, 3, 10.0, 1).verdict == ProbeVerdict::Inconclusive);
}

}  // TEST_SUITE
