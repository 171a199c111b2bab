#include <doctest.h>

#include "mcqn/builtin.hpp"
#include "mcqn/classify.hpp"
#include "mcqn/fluid.hpp"

using namespace mcqn;

namespace {

std::string probe_verdict(const NetworkSpec& s) {
  try {
    switch (stability_probe(s, 10, 1e4, 42).verdict) {
      case ProbeVerdict::Stable: return "Stable";
      case ProbeVerdict::Diverging: return "Diverging";
      case ProbeVerdict::Inconclusive: return "Inconclusive";
    }
  } catch (const std::exception& e) {
    return std::string("error: ") + e.what();
  }
  return "";
}

NetworkSpec asymmetric(double a7, double a8) {
  NetworkSpec s = modified_krss_family(a7);
  s.arrival_rates[7] = a8;
  return s;
}

}  // namespace

TEST_SUITE("consistency") {

TEST_CASE("closed-form verdicts agree with the fluid probe") {
  std::vector<NetworkSpec> specs;
  for (int i = 0; i <= 40; ++i) specs.push_back(modified_krss_family(0.30 + 0.005 * i));
  for (int i = 0; i <= 12; ++i) specs.push_back(modified_krss_family(5.0 / 6.0 + 1e-6 + 0.005 * i));
  for (double a7 : {0.2, 0.4, 0.86, 0.88})
    for (double a8 : {0.3, 0.45, 0.87, 0.89}) specs.push_back(asymmetric(a7, a8));

  for (const auto& s : specs) {
    const auto v = classify_modified_krss(s);
    if (v.verdict == Verdict::Indeterminate) continue;
    const std::string probe = probe_verdict(s);
    INFO("alpha7 = ", s.arrival_rates[6], ", alpha8 = ", s.arrival_rates[7], ", probe ", probe);
    CHECK(probe == (v.verdict == Verdict::Stable ? "Stable" : "Diverging"));
  }
}

TEST_CASE("krss closed form agrees with the fluid probe") {
  for (double m2 : {0.3, 0.45, 0.55, 0.7})
    for (double m4 : {0.3, 0.45, 0.55, 0.7}) {
      const NetworkSpec s = builtin_network(Topology::Krss, {std::vector<double>{1, 0, 1, 0}, std::vector<double>{0.2, m2, 0.2, m4}});
      const auto v = classify_krss(s);
      if (v.verdict == Verdict::Indeterminate) continue;
      INFO("m2 = ", m2, ", m4 = ", m4);
      CHECK(probe_verdict(s) == (v.verdict == Verdict::Stable ? "Stable" : "Diverging"));
    }
}

}  // TEST_SUITE
