#pragma once

// Open multiclass queueing networks with static preemptive priorities.
//
// Classes and stations are 0-based inside the library. The JSON file format
// and all user-facing tables use 1-based ids.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mcqn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A network instance (J, K, alpha, m, C, P, pi).
///
/// `priority[k]` is the rank of class k: smaller rank means higher
/// priority. Only the order among classes sharing a station matters.
/// The constituency matrix is never stored; see constituency_matrix().
struct NetworkSpec {
  std::size_t num_stations = 0;
  Vector arrival_rates;              // alpha, length K
  Vector mean_service;               // m, length K
  std::vector<std::size_t> station_of;  // sigma, length K, values < J
  Matrix routing;                    // P, K x K
  std::vector<int> priority;         // pi, a permutation of 1..K

  std::size_t num_classes() const { return station_of.size(); }
  double service_rate(std::size_t k) const { return 1.0 / mean_service[k]; }
  Vector service_rates() const { return mean_service.cwiseInverse(); }
};

struct Violation {
  std::string rule;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(const std::string& rule) const;
};

/// Checks every structural and numeric invariant of a NetworkSpec.
/// Never throws; every problem found is listed in the report.
ValidationReport validate_network(const NetworkSpec& spec);

/// Throws InputError carrying the first violation when validation fails.
void require_valid(const NetworkSpec& spec);

/// Decides convergence of I + P + P^2 + ... by repeated squaring.
/// Returns true when some power P^(2^i), i <= 64, has every entry below
/// 1e-15. The spectral-radius margin 1e-12 is implied by the squaring cap.
bool neumann_series_converges(const Matrix& routing);

/// J x K matrix with c(j,k) = 1 iff station_of[k] == j.
Matrix constituency_matrix(const NetworkSpec& spec);

/// Recovers station_of from a constituency matrix. Throws InputError if a
/// column does not contain exactly one 1.
std::vector<std::size_t> stations_from_constituency(const Matrix& c);

/// H_k: classes at station_of[k] whose rank is <= rank of k (k included).
std::vector<std::vector<std::size_t>> higher_or_equal_sets(const NetworkSpec& spec);

/// Classes of each station, highest priority first.
std::vector<std::vector<std::size_t>> station_priority_lists(const NetworkSpec& spec);

struct TrafficSummary {
  Vector lambda;  // nominal total arrival rates, length K
  Vector beta;    // class intensities, length K
  Vector rho;     // station intensities, length J
};

/// Solves lambda = alpha + P' lambda by a direct LU solve.
/// Throws SingularSystemError when (I - P') is numerically singular.
TrafficSummary traffic_solve(const NetworkSpec& spec);

/// Infinity-norm residual of the traffic equation.
double traffic_residual(const NetworkSpec& spec, const Vector& lambda);

}  // namespace mcqn
