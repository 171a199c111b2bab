#include <doctest.h>

#include <numeric>
#include <random>

#include "mcqn/builtin.hpp"
#include "mcqn/classify.hpp"
#include "oracles.hpp"

using namespace mcqn;

namespace {

NetworkSpec krss(double a1, double a3, std::vector<double> m) {
  return builtin_network(Topology::Krss, {std::vector<double>{a1, 0, a3, 0}, std::move(m)});
}

// new class i is old class perm[i]; stations are renumbered by srank.
NetworkSpec relabel(const NetworkSpec& s, const std::vector<std::size_t>& perm,
                    const std::vector<std::size_t>& srank) {
  NetworkSpec r = s;
  const auto k = static_cast<Eigen::Index>(perm.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto p = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
    r.arrival_rates[i] = s.arrival_rates[p];
    r.mean_service[i] = s.mean_service[p];
    r.station_of[static_cast<std::size_t>(i)] = srank[s.station_of[static_cast<std::size_t>(p)]];
    r.priority[static_cast<std::size_t>(i)] = s.priority[static_cast<std::size_t>(p)];
    for (Eigen::Index j = 0; j < k; ++j) r.routing(i, j) = s.routing(p, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
  }
  return r;
}

}  // namespace

TEST_SUITE("classify") {

TEST_CASE("virtual station intensity") {
  CHECK(virtual_station_intensity(krss(1, 1, {0.2, 0.6, 0.2, 0.6})) == doctest::Approx(1.2));
  CHECK(virtual_station_intensity(krss(1, 1, {0.2, 0.4, 0.2, 0.4})) == doctest::Approx(0.8));
  CHECK(virtual_station_intensity(krss(0, 0, {0.2, 0.4, 0.2, 0.4})) == 0.0);
  CHECK(virtual_station_intensity(modified_krss_family(0.5)) == doctest::Approx(1.2));
  CHECK_THROWS_AS(virtual_station_intensity(builtin_network(Topology::Lk)), TopologyMismatch);
}

TEST_CASE("krss examples") {
  const auto stable = classify_krss(krss(1, 1, {0.2, 0.4, 0.2, 0.4}));
  CHECK(stable.verdict == Verdict::Stable);
  CHECK(stable.witness("rho_1") == doctest::Approx(0.6));
  CHECK(stable.witness("virtual_station") == doctest::Approx(0.8));
  CHECK(classify_krss(krss(1, 1, {0.2, 0.6, 0.2, 0.6})).verdict == Verdict::Unstable);
  const auto overloaded = classify_krss(krss(1, 1, {1.0, 0.1, 0.5, 0.1}));
  CHECK(overloaded.verdict == Verdict::Unstable);
  CHECK(overloaded.reason.find("station 1") != std::string::npos);
  CHECK_THROWS_AS(classify_krss(modified_krss_family(0.5)), TopologyMismatch);
}

TEST_CASE("krss matches direct evaluation of the iff condition") {
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double m2 = 0.05 + 0.1 * i, m4 = 0.07 + 0.1 * j;
      const NetworkSpec s = krss(1, 1, {0.2, m2, 0.2, m4});
      const bool expected = (0.2 + m4 < 1.0) && (m2 + 0.2 < 1.0) && (m2 + m4 < 1.0);
      const auto v = classify_krss(s);
      CHECK(v.verdict == (expected ? Verdict::Stable : Verdict::Unstable));
      if (v.verdict == Verdict::Stable) CHECK(traffic_solve(s).rho.maxCoeff() < 1.0);
    }
}

TEST_CASE("krss boundary is indeterminate") {
  const auto v = classify_krss(krss(1, 1, {0.2, 0.5, 0.2, 0.5}));
  CHECK(v.verdict == Verdict::Indeterminate);
  CHECK(v.reason == "boundary");
}

TEST_CASE("modified krss reference family") {
  const auto stable = classify_modified_krss(modified_krss_family(8.0 / 9.0));
  CHECK(stable.verdict == Verdict::Stable);
  CHECK(stable.reason == "Theorem 1(1)");
  CHECK(stable.witness("m5/(1-alpha7*m7)") == doctest::Approx(0.9));
  const auto unstable = classify_modified_krss(modified_krss_family(1.0 / 3.0));
  CHECK(unstable.verdict == Verdict::Unstable);
  CHECK(unstable.witness("m5/(1-alpha7*m7)") == doctest::Approx(0.15));
  const auto between = classify_modified_krss(modified_krss_family(0.6));
  CHECK(between.verdict == Verdict::Indeterminate);
  CHECK(between.witness("m5/(1-alpha7*m7)") == doctest::Approx(0.25));
}

TEST_CASE("modified krss outside the hypothesis") {
  NetworkSpec s = modified_krss_family(8.0 / 9.0);
  s.mean_service[1] = 0.3;
  s.mean_service[3] = 0.3;
  const auto v = classify_modified_krss(s);
  CHECK(v.verdict == Verdict::Indeterminate);
  CHECK(v.reason == "outside Theorem 1 hypothesis");
}

TEST_CASE("modified lk instances") {
  CHECK(classify_modified_lk(modified_lk_family(1.37)).verdict == Verdict::Stable);
  CHECK(classify_modified_lk(modified_lk_family(1.0)).verdict == Verdict::Unstable);
  const auto other = classify_modified_lk(modified_lk_family(1.2));
  CHECK(other.verdict == Verdict::Indeterminate);
  CHECK(other.reason == "outside Theorem 2 instances");
}

TEST_CASE("thresholds") {
  const auto t = theorem1_thresholds(modified_krss_family(0.5));
  CHECK(t.class7.stabilizing == doctest::Approx(5.0 / 6.0));
  CHECK(t.class7.destabilizing == doctest::Approx(0.5));
  CHECK(t.class8.stabilizing == doctest::Approx(5.0 / 6.0));

  NetworkSpec equal = modified_krss_family(0.5);
  equal.mean_service[4] = 0.6;
  CHECK(theorem1_thresholds(equal).class7.stabilizing == doctest::Approx(0.0));
  CHECK(theorem1_thresholds(equal).class7.destabilizing < 0.0);
}

TEST_CASE("generic classify never calls an overloaded network stable") {
  for (Topology t : {Topology::Krss, Topology::ModifiedKrss, Topology::Lk, Topology::ModifiedLk}) {
    NetworkSpec s = builtin_network(t);
    s.arrival_rates *= 3.0;
    CHECK(classify(s).verdict != Verdict::Stable);
  }
  CHECK(classify(oracle::mm1(0.5, 1.0)).reason == "no closed-form condition for this topology");
}

TEST_CASE("verdicts are invariant under relabeling") {
  std::mt19937_64 gen(7);
  const std::vector<NetworkSpec> specs{krss(1, 1, {0.2, 0.4, 0.2, 0.4}), krss(1, 1, {0.2, 0.6, 0.2, 0.6}),
                                       modified_krss_family(8.0 / 9.0), modified_krss_family(1.0 / 3.0),
                                       modified_krss_family(0.6), modified_lk_family(1.37),
                                       modified_lk_family(1.0)};
  for (const auto& s : specs) {
    const auto base = classify(s);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::size_t> perm(s.num_classes()), srank(s.num_stations);
      std::iota(perm.begin(), perm.end(), 0);
      std::iota(srank.begin(), srank.end(), 0);
      std::shuffle(perm.begin(), perm.end(), gen);
      std::shuffle(srank.begin(), srank.end(), gen);
      const NetworkSpec r = relabel(s, perm, srank);
      REQUIRE(validate_network(r).ok());
      const auto v = classify(r);
      CHECK(v.verdict == base.verdict);
      CHECK(v.reason == base.reason);
    }
  }
}

}  // TEST_SUITE
