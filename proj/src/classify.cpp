#include "mcqn/classify.hpp"

#include <cmath>
#include <limits>

namespace mcqn {

namespace {

enum class Cmp { Less, Greater, Boundary };

Cmp compare(double a, double b) {
  if (std::abs(a - b) <= kBoundaryTolerance) return Cmp::Boundary;
  return a < b ? Cmp::Less : Cmp::Greater;
}

NetworkSpec canonical_or_throw(const NetworkSpec& spec, std::initializer_list<Topology> allowed,
                               Topology* which = nullptr) {
  for (auto t : allowed) {
    if (auto m = match_topology(spec, t)) {
      if (which) *which = t;
      return canonical_view(spec, *m);
    }
  }
  std::string names;
  for (auto t : allowed) names += (names.empty() ? "" : " or ") + std::string(topology_name(t));
  throw TopologyMismatch("network does not have the " + names + " topology");
}

void add_rho_witnesses(StabilityVerdict& v, const Vector& rho) {
  for (Eigen::Index j = 0; j < rho.size(); ++j)
    v.witness_values.emplace_back("rho_" + std::to_string(j + 1), rho[j]);
}

// Applies the necessary condition rho < e. Returns true when a verdict was
// reached (Unstable or boundary).
bool station_load_verdict(StabilityVerdict& v, const Vector& rho) {
  bool boundary = false;
  for (Eigen::Index j = 0; j < rho.size(); ++j) {
    const Cmp c = compare(rho[j], 1.0);
    if (c == Cmp::Greater) {
      v.verdict = Verdict::Unstable;
      v.reason = "station " + std::to_string(j + 1) + " intensity >= 1";
      return true;
    }
    if (c == Cmp::Boundary) boundary = true;
  }
  if (boundary) {
    v.verdict = Verdict::Indeterminate;
    v.reason = "boundary";
    return true;
  }
  return false;
}

double m(const NetworkSpec& s, int k) { return s.mean_service[k - 1]; }
double a(const NetworkSpec& s, int k) { return s.arrival_rates[k - 1]; }

}  // namespace

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Unstable: return "Unstable";
    case Verdict::Indeterminate: return "Indeterminate";
  }
  return "?";
}

double StabilityVerdict::witness(std::string_view name) const {
  for (const auto& [n, value] : witness_values)
    if (n == name) return value;
  return std::numeric_limits<double>::quiet_NaN();
}

double virtual_station_intensity(const NetworkSpec& spec) {
  const NetworkSpec s = canonical_or_throw(spec, {Topology::Krss, Topology::ModifiedKrss});
  return a(s, 1) * m(s, 2) + a(s, 3) * m(s, 4);
}

StabilityVerdict classify_krss(const NetworkSpec& spec) {
  const NetworkSpec s = canonical_or_throw(spec, {Topology::Krss});
  const TrafficSummary traffic = traffic_solve(s);
  const double virtual_load = a(s, 1) * m(s, 2) + a(s, 3) * m(s, 4);

  StabilityVerdict v;
  add_rho_witnesses(v, traffic.rho);
  v.witness_values.emplace_back("virtual_station", virtual_load);
  if (station_load_verdict(v, traffic.rho)) return v;

  switch (compare(virtual_load, 1.0)) {
    case Cmp::Boundary:
      v.verdict = Verdict::Indeterminate;
      v.reason = "boundary";
      break;
    case Cmp::Greater:
      v.verdict = Verdict::Unstable;
      v.reason = "virtual-station intensity > 1";
      break;
    case Cmp::Less:
      v.verdict = Verdict::Stable;
      v.reason = "rho < e and virtual-station intensity < 1";
      break;
  }
  return v;
}

StabilityVerdict classify_modified_krss(const NetworkSpec& spec) {
  const NetworkSpec s = canonical_or_throw(spec, {Topology::ModifiedKrss});
  const TrafficSummary traffic = traffic_solve(s);
  const double virtual_load = a(s, 1) * m(s, 2) + a(s, 3) * m(s, 4);

  StabilityVerdict v;
  add_rho_witnesses(v, traffic.rho);
  v.witness_values.emplace_back("virtual_station", virtual_load);
  if (station_load_verdict(v, traffic.rho)) return v;

  switch (compare(virtual_load, 1.0)) {
    case Cmp::Boundary:
      v.verdict = Verdict::Indeterminate;
      v.reason = "boundary";
      return v;
    case Cmp::Less:
      v.verdict = Verdict::Indeterminate;
      v.reason = "outside Theorem 1 hypothesis";
      return v;
    case Cmp::Greater:
      break;
  }

  // rho < e gives alpha7 m7 < 1 and alpha8 m8 < 1.
  const double ratio7 = m(s, 5) / (1.0 - a(s, 7) * m(s, 7));
  const double ratio8 = m(s, 6) / (1.0 - a(s, 8) * m(s, 8));
  v.witness_values.emplace_back("m5/(1-alpha7*m7)", ratio7);
  v.witness_values.emplace_back("m6/(1-alpha8*m8)", ratio8);

  const Cmp r7_vs_m2 = compare(ratio7, m(s, 2));
  const Cmp r8_vs_m4 = compare(ratio8, m(s, 4));
  const Cmp r7_vs_m1 = compare(ratio7, m(s, 1));
  const Cmp r8_vs_m3 = compare(ratio8, m(s, 3));

  if (r7_vs_m2 == Cmp::Greater && r8_vs_m4 == Cmp::Greater) {
    v.verdict = Verdict::Stable;
    v.reason = "Theorem 1(1)";
  } else if (r7_vs_m1 == Cmp::Less && r8_vs_m3 == Cmp::Less) {
    v.verdict = Verdict::Unstable;
    v.reason = "Theorem 1(2)";
  } else {
    v.verdict = Verdict::Indeterminate;
    const bool boundary = r7_vs_m2 == Cmp::Boundary || r8_vs_m4 == Cmp::Boundary ||
                          r7_vs_m1 == Cmp::Boundary || r8_vs_m3 == Cmp::Boundary;
    v.reason = boundary ? "boundary" : "between Theorem 1 branches";
  }
  return v;
}

StabilityVerdict classify_modified_lk(const NetworkSpec& spec) {
  const NetworkSpec s = canonical_or_throw(spec, {Topology::ModifiedLk});
  static const double proven_m[] = {0.1, 0.6, 0.1, 0.6, 0.7, 0.027};

  StabilityVerdict v;
  v.witness_values.emplace_back("alpha_6", a(s, 6));
  bool m_matches = true;
  for (int k = 1; k <= 6; ++k)
    if (std::abs(m(s, k) - proven_m[k - 1]) > kBoundaryTolerance) m_matches = false;

  if (m_matches && std::abs(a(s, 6) - 1.37) <= kBoundaryTolerance) {
    v.verdict = Verdict::Stable;
    v.reason = "Theorem 2(1)";
  } else if (m_matches && std::abs(a(s, 6) - 1.0) <= kBoundaryTolerance) {
    v.verdict = Verdict::Unstable;
    v.reason = "Theorem 2(2)";
  } else {
    v.verdict = Verdict::Indeterminate;
    v.reason = "outside Theorem 2 instances";
  }
  return v;
}

Theorem1Thresholds theorem1_thresholds(const NetworkSpec& spec) {
  const NetworkSpec s = canonical_or_throw(spec, {Topology::ModifiedKrss});
  if (m(s, 7) == 0.0 || m(s, 8) == 0.0)
    throw InputError("theorem1_thresholds: m7 and m8 must be nonzero");
  Theorem1Thresholds t;
  t.class7 = {(1.0 - m(s, 5) / m(s, 2)) / m(s, 7), (1.0 - m(s, 5) / m(s, 1)) / m(s, 7)};
  t.class8 = {(1.0 - m(s, 6) / m(s, 4)) / m(s, 8), (1.0 - m(s, 6) / m(s, 3)) / m(s, 8)};
  return t;
}

StabilityVerdict classify(const NetworkSpec& spec) {
  const auto match = identify_topology(spec);
  if (match) {
    switch (match->topology) {
      case Topology::Krss: return classify_krss(spec);
      case Topology::ModifiedKrss: return classify_modified_krss(spec);
      case Topology::Lk: break;
      case Topology::ModifiedLk: {
        StabilityVerdict v;
        const TrafficSummary traffic = traffic_solve(spec);
        if (station_load_verdict(v, traffic.rho)) {
          add_rho_witnesses(v, traffic.rho);
          return v;
        }
        return classify_modified_lk(spec);
      }
    }
  }
  StabilityVerdict v;
  const TrafficSummary traffic = traffic_solve(spec);
  add_rho_witnesses(v, traffic.rho);
  if (station_load_verdict(v, traffic.rho)) return v;
  v.verdict = Verdict::Indeterminate;
  v.reason = "no closed-form condition for this topology";
  return v;
}

}  // namespace mcqn
