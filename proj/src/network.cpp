#include "mcqn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mcqn {

namespace {

constexpr double kRowSumSlack = 1e-12;
constexpr double kNeumannEntryFloor = 1e-15;
constexpr int kMaxSquarings = 64;

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  os.precision(12);
  (os << ... << args);
  return os.str();
}

}  // namespace

bool ValidationReport::has(const std::string& rule) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.rule == rule; });
}

bool neumann_series_converges(const Matrix& routing) {
  if (routing.size() == 0) return true;
  Matrix power = routing.cwiseAbs();
  for (int i = 0; i <= kMaxSquarings; ++i) {
    if (!power.allFinite()) return false;
    if (power.maxCoeff() < kNeumannEntryFloor) return true;
    if (i == kMaxSquarings) break;
    power = power * power;
  }
  return false;
}

ValidationReport validate_network(const NetworkSpec& spec) {
  ValidationReport report;
  auto fail = [&](std::string rule, std::string detail) {
    report.violations.push_back({std::move(rule), std::move(detail)});
  };

  const std::size_t k_count = spec.num_classes();
  if (spec.num_stations == 0) fail("stations", "network must have at least one station");
  if (k_count == 0) fail("classes", "network must have at least one class");

  bool shapes_ok = true;
  auto check_len = [&](const char* what, std::size_t got) {
    if (got != k_count) {
      fail("dimensions", cat(what, " has length ", got, ", expected ", k_count));
      shapes_ok = false;
    }
  };
  check_len("arrival_rates", static_cast<std::size_t>(spec.arrival_rates.size()));
  check_len("mean_service", static_cast<std::size_t>(spec.mean_service.size()));
  check_len("priority", spec.priority.size());
  if (static_cast<std::size_t>(spec.routing.rows()) != k_count ||
      static_cast<std::size_t>(spec.routing.cols()) != k_count) {
    fail("dimensions", cat("routing is ", spec.routing.rows(), "x", spec.routing.cols(),
                           ", expected ", k_count, "x", k_count));
    shapes_ok = false;
  }
  if (!shapes_ok || k_count == 0) return report;

  for (std::size_t k = 0; k < k_count; ++k) {
    const double a = spec.arrival_rates[k];
    if (!std::isfinite(a) || a < 0.0)
      fail("arrival-rate", cat("class ", k + 1, " has arrival rate ", a));
    const double m = spec.mean_service[k];
    if (!std::isfinite(m) || m <= 0.0)
      fail("mean-service", cat("class ", k + 1, " has mean service time ", m));
    if (spec.station_of[k] >= spec.num_stations)
      fail("station-index", cat("class ", k + 1, " refers to station ", spec.station_of[k] + 1,
                                " of ", spec.num_stations));
  }

  bool routing_entries_ok = true;
  for (std::size_t k = 0; k < k_count; ++k) {
    double row_sum = 0.0;
    for (std::size_t l = 0; l < k_count; ++l) {
      const double p = spec.routing(k, l);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        fail("routing-entry", cat("p(", k + 1, ",", l + 1, ") = ", p));
        routing_entries_ok = false;
      }
      row_sum += p;
    }
    if (row_sum > 1.0 + kRowSumSlack)
      fail("substochastic", cat("routing row ", k + 1, " sums to ", row_sum));
  }
  if (routing_entries_ok && !neumann_series_converges(spec.routing))
    fail("Neumann series divergent",
         "I + P + P^2 + ... does not converge (some class can circulate forever)");

  std::vector<int> ranks = spec.priority;
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < k_count; ++i) {
    if (ranks[i] != static_cast<int>(i + 1)) {
      fail("priority-permutation", "priority ranks must be a permutation of 1..K");
      break;
    }
  }
  return report;
}

void require_valid(const NetworkSpec& spec) {
  auto report = validate_network(spec);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw InputError("invalid network: " + v.rule + ": " + v.detail);
  }
}

Matrix constituency_matrix(const NetworkSpec& spec) {
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(spec.num_stations),
                          static_cast<Eigen::Index>(spec.num_classes()));
  for (std::size_t k = 0; k < spec.num_classes(); ++k)
    c(static_cast<Eigen::Index>(spec.station_of[k]), static_cast<Eigen::Index>(k)) = 1.0;
  return c;
}

std::vector<std::size_t> stations_from_constituency(const Matrix& c) {
  std::vector<std::size_t> station_of(static_cast<std::size_t>(c.cols()));
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    int ones = 0;
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
      if (c(j, k) == 1.0) {
        ++ones;
        station_of[static_cast<std::size_t>(k)] = static_cast<std::size_t>(j);
      } else if (c(j, k) != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) throw InputError(cat("constituency column ", k + 1, " is not a unit vector"));
  }
  return station_of;
}

std::vector<std::vector<std::size_t>> station_priority_lists(const NetworkSpec& spec) {
  std::vector<std::vector<std::size_t>> lists(spec.num_stations);
  for (std::size_t k = 0; k < spec.num_classes(); ++k) lists[spec.station_of[k]].push_back(k);
  for (auto& list : lists) {
    std::sort(list.begin(), list.end(),
              [&](std::size_t a, std::size_t b) { return spec.priority[a] < spec.priority[b]; });
  }
  return lists;
}

std::vector<std::vector<std::size_t>> higher_or_equal_sets(const NetworkSpec& spec) {
  std::vector<std::vector<std::size_t>> h(spec.num_classes());
  for (std::size_t k = 0; k < spec.num_classes(); ++k) {
    for (std::size_t l = 0; l < spec.num_classes(); ++l) {
      if (spec.station_of[l] == spec.station_of[k] && spec.priority[l] <= spec.priority[k])
        h[k].push_back(l);
    }
  }
  return h;
}

TrafficSummary traffic_solve(const NetworkSpec& spec) {
  const auto k_count = static_cast<Eigen::Index>(spec.num_classes());
  const Matrix system = Matrix::Identity(k_count, k_count) - spec.routing.transpose();
  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
    throw SingularSystemError("traffic equation (I - P') is singular; validate the network first");

  TrafficSummary out;
  out.lambda = lu.solve(spec.arrival_rates);
  const double tol = 1e-10 * (1.0 + out.lambda.cwiseAbs().maxCoeff());
  if (!out.lambda.allFinite() || traffic_residual(spec, out.lambda) > tol)
    throw SingularSystemError("traffic equation solve did not meet its residual bound");
  // Nonnegativity of the exact solution; only rounding can produce -0 noise.
  out.lambda = out.lambda.cwiseMax(0.0);
  out.beta = spec.mean_service.cwiseProduct(out.lambda);
  out.rho = constituency_matrix(spec) * out.beta;
  return out;
}

double traffic_residual(const NetworkSpec& spec, const Vector& lambda) {
  return (lambda - spec.arrival_rates - spec.routing.transpose() * lambda).cwiseAbs().maxCoeff();
}

}  // namespace mcqn
