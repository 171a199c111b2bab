#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mcqn/fluid.hpp"
#include "mcqn/network.hpp"

namespace oracle {

using mcqn::Matrix;
using mcqn::NetworkSpec;
using mcqn::Vector;

inline NetworkSpec make_spec(std::size_t stations, std::vector<double> alpha, std::vector<double> m,
                             std::vector<std::size_t> station_of, std::vector<int> priority,
                             std::vector<std::pair<std::pair<int, int>, double>> routes = {}) {
  NetworkSpec s;
  s.num_stations = stations;
  const auto k = static_cast<Eigen::Index>(alpha.size());
  s.arrival_rates = Eigen::Map<Vector>(alpha.data(), k);
  s.mean_service = Eigen::Map<Vector>(m.data(), k);
  s.station_of = std::move(station_of);
  s.priority = std::move(priority);
  s.routing = Matrix::Zero(k, k);
  for (const auto& [edge, p] : routes) s.routing(edge.first, edge.second) = p;
  return s;
}

inline NetworkSpec mm1(double alpha, double m) { return make_spec(1, {alpha}, {m}, {0}, {1}); }

// Stationary means of a single preemptive-priority station with two
// independent Poisson streams, from the balance equations on the box
// [0, cap]^2 (arrivals to a full queue are lost).
inline std::pair<double, double> two_class_priority_means(double a1, double a2, double mu1, double mu2,
                                                          int cap) {
  const int side = cap + 1;
  const int n = side * side;
  auto id = [side](int i, int j) { return i * side + j; };
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> out_rate(static_cast<std::size_t>(n), 0.0);
  auto add = [&](int from, int to, double rate) {
    trip.emplace_back(to, from, rate);  // transposed generator: rows are balance equations
    out_rate[static_cast<std::size_t>(from)] += rate;
  };
  for (int i = 0; i <= cap; ++i)
    for (int j = 0; j <= cap; ++j) {
      const int s = id(i, j);
      if (i < cap) add(s, id(i + 1, j), a1);
      if (j < cap) add(s, id(i, j + 1), a2);
      if (i > 0) add(s, id(i - 1, j), mu1);
      else if (j > 0) add(s, id(i, j - 1), mu2);
    }
  for (int s = 0; s < n; ++s) trip.emplace_back(s, s, -out_rate[static_cast<std::size_t>(s)]);
  // Replace the last balance equation by the normalization sum(pi) = 1.
  std::vector<Eigen::Triplet<double>> kept;
  for (const auto& t : trip)
    if (t.row() != n - 1) kept.push_back(t);
  for (int s = 0; s < n; ++s) kept.emplace_back(n - 1, s, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(kept.begin(), kept.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  Vector b = Vector::Zero(n);
  b[n - 1] = 1.0;
  const Vector pi = lu.solve(b);
  double e1 = 0, e2 = 0;
  for (int i = 0; i <= cap; ++i)
    for (int j = 0; j <= cap; ++j) {
      e1 += i * pi[id(i, j)];
      e2 += j * pi[id(i, j)];
    }
  return {e1, e2};
}

// Random feedforward network: classes are visited in index order, each
// routes only to later classes. Loads are scaled below one per station.
inline NetworkSpec random_feedforward(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> stations_d(1, 4), per_station(1, 3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int j_count = stations_d(gen);
  std::vector<std::size_t> sigma;
  for (int j = 0; j < j_count; ++j)
    for (int c = per_station(gen); c > 0; --c) sigma.push_back(static_cast<std::size_t>(j));
  std::shuffle(sigma.begin(), sigma.end(), gen);
  const auto k = static_cast<Eigen::Index>(sigma.size());

  NetworkSpec s;
  s.num_stations = static_cast<std::size_t>(j_count);
  s.station_of = sigma;
  s.arrival_rates = Vector::Zero(k);
  s.mean_service = Vector::Zero(k);
  s.routing = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    s.arrival_rates[i] = u01(gen) < 0.6 ? u01(gen) : 0.0;
    s.mean_service[i] = 0.05 + u01(gen);
    double left = u01(gen) < 0.8 ? u01(gen) : 0.0;
    for (Eigen::Index t = i + 1; t < k && left > 0.0; ++t) {
      if (u01(gen) < 0.5) continue;
      const double p = left * u01(gen);
      s.routing(i, t) = p;
      left -= p;
    }
  }
  if (s.arrival_rates.sum() == 0.0) s.arrival_rates[0] = 0.5;
  s.priority.resize(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) s.priority[i] = static_cast<int>(i) + 1;
  std::shuffle(s.priority.begin(), s.priority.end(), gen);

  // Scale service times so the busiest station sits at a random load < 1.
  const Vector lambda = (Matrix::Identity(k, k) - s.routing.transpose()).lu().solve(s.arrival_rates);
  Vector rho = Vector::Zero(j_count);
  for (Eigen::Index i = 0; i < k; ++i) rho[static_cast<Eigen::Index>(sigma[static_cast<std::size_t>(i)])] += lambda[i] * s.mean_service[i];
  const double target = 0.3 + 0.65 * u01(gen);
  s.mean_service *= target / rho.maxCoeff();
  return s;
}

inline Vector random_levels(std::uint64_t seed, Eigen::Index k, double total) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> e(1.0);
  Vector q(k);
  for (Eigen::Index i = 0; i < k; ++i) q[i] = e(gen);
  return q * (total / q.sum());
}

// Fluid levels at time t by linear interpolation between breakpoints.
inline Vector levels_at(const mcqn::FluidTrajectory& traj, double t) {
  const auto& b = traj.breakpoints;
  if (t <= b.front().state.t) return b.front().state.levels;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const double t0 = b[i].state.t, t1 = b[i + 1].state.t;
    if (t <= t1) {
      if (t1 <= t0) return b[i + 1].state.levels;
      const double w = (t - t0) / (t1 - t0);
      return (1.0 - w) * b[i].state.levels + w * b[i + 1].state.levels;
    }
  }
  // Past the last breakpoint the final segment continues at its rates.
  const auto& last = b.back();
  return last.state.levels;
}

// Worst violation of "sum over H_k of u < 1 implies Q = 0 on H_k" along a trajectory.
inline bool complementarity_holds(const NetworkSpec& spec, const mcqn::FluidTrajectory& traj, double tol) {
  const auto h = mcqn::higher_or_equal_sets(spec);
  for (std::size_t i = 0; i + 1 < traj.breakpoints.size(); ++i) {
    const auto& a = traj.breakpoints[i];
    const auto& b = traj.breakpoints[i + 1];
    for (const auto& set : h) {
      double used = 0.0;
      for (std::size_t l : set) used += a.rates[static_cast<Eigen::Index>(l)];
      if (used > 1.0 + tol) return false;
      if (used >= 1.0 - tol) continue;
      for (std::size_t l : set) {
        const auto li = static_cast<Eigen::Index>(l);
        if (a.state.levels[li] > tol || b.state.levels[li] > tol) return false;
      }
    }
  }
  return true;
}

inline bool idleness_monotone(const NetworkSpec& spec, const mcqn::FluidTrajectory& traj, double tol) {
  const auto h = mcqn::higher_or_equal_sets(spec);
  for (std::size_t i = 0; i + 1 < traj.breakpoints.size(); ++i) {
    const auto& a = traj.breakpoints[i].state;
    const auto& b = traj.breakpoints[i + 1].state;
    for (const auto& set : h) {
      double ya = a.t, yb = b.t;
      for (std::size_t l : set) {
        ya -= a.allocated[static_cast<Eigen::Index>(l)];
        yb -= b.allocated[static_cast<Eigen::Index>(l)];
      }
      if (yb < ya - tol) return false;
    }
    for (Eigen::Index k = 0; k < a.allocated.size(); ++k)
      if (b.allocated[k] < a.allocated[k] - tol || b.allocated[k] - a.allocated[k] > (b.t - a.t) + tol)
        return false;
  }
  return true;
}

}  // namespace oracle
