#pragma once

// Continuous-time Markov chain simulation of the queueing network under
// preemptive priority. Each station serves its highest-priority nonempty
// class. Service is exponential, so a preempted job's remaining work is
// simply resampled and the next event is drawn from the total event rate.

#include <cstdint>
#include <functional>
#include <vector>

#include "mcqn/network.hpp"

namespace mcqn {

struct SimConfig {
  double horizon = 1e6;
  double warmup = 1e5;
  std::uint64_t seed = 42;
  std::size_t batches = 20;
  std::vector<std::int64_t> initial_state;  // empty means start empty
};

struct SimStats {
  double mean_total_queue = 0.0;      // time average of sum_k Q_k over [warmup, horizon]
  std::vector<double> per_class_means;
  double ci_halfwidth = 0.0;          // 95% batch-means half width
  bool diverged = false;
  std::vector<std::int64_t> final_queue;
  std::vector<double> batch_means;
  std::uint64_t events = 0;
  std::uint64_t seed = 0;             // seed of the stream actually used
};

/// Throws InputError for an invalid spec or config.
SimStats simulate(const NetworkSpec& spec, const SimConfig& config);

/// Replications with seeds derive_stream_seed(config.seed, r), run on up to
/// `threads` workers (0 means hardware concurrency, so results merge in
/// replication order regardless).
std::vector<SimStats> simulate_replications(const NetworkSpec& spec, const SimConfig& config,
                                            std::size_t replications, std::size_t threads = 0);

class InsufficientBatches : public InputError {
 public:
  using InputError::InputError;
};

inline constexpr std::size_t kMinDivergenceBatches = 10;
inline constexpr double kDivergenceSlopeT = 3.0;
inline constexpr double kDivergenceGrowthRatio = 5.0;

/// Flags a run whose batch means trend upward: least-squares slope against
/// batch index with t statistic > 3 and last batch mean > 5x the first.
/// Throws InsufficientBatches below 10 batches.
bool divergence_test(const std::vector<double>& batch_means);

/// 95% two-sided Student-t half width of the mean of `values`.
double mean_ci_halfwidth(const std::vector<double>& values);

/// Queue-length vectors at the requested (sorted) times, starting from
/// `initial` at time 0.
std::vector<std::vector<std::int64_t>> sample_path(const NetworkSpec& spec,
                                                   const std::vector<std::int64_t>& initial,
                                                   const std::vector<double>& times,
                                                   std::uint64_t seed);

struct TraceEvent {
  double t;
  std::vector<std::int64_t> queue;   // after the event
  std::vector<int> in_service;       // per station, class index or -1
};

/// First `max_events` events of one run, for checking sample-path rules.
std::vector<TraceEvent> trace_events(const NetworkSpec& spec, const std::vector<std::int64_t>& initial,
                                     std::size_t max_events, std::uint64_t seed);

}  // namespace mcqn
