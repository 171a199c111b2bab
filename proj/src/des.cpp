#include "mcqn/des.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "mcqn/rng.hpp"

namespace mcqn {

namespace {

struct Route {
  double cumulative;
  std::size_t to;
};

// One sample path of the queue-length chain.
class Engine {
 public:
  Engine(const NetworkSpec& spec, const std::vector<std::int64_t>& initial, std::uint64_t seed)
      : rng_(seed),
        stations_(station_priority_lists(spec)),
        station_of_(spec.station_of),
        mu_(spec.num_classes()),
        arrival_cumulative_(spec.num_classes()),
        routes_(spec.num_classes()),
        queue_(spec.num_classes(), 0),
        served_(spec.num_stations, -1) {
    const std::size_t k_count = spec.num_classes();
    double acc = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      mu_[k] = spec.service_rate(k);
      acc += spec.arrival_rates[i];
      arrival_cumulative_[k] = acc;
      double cum = 0.0;
      for (std::size_t l = 0; l < k_count; ++l) {
        const double p = spec.routing(i, static_cast<Eigen::Index>(l));
        if (p > 0.0) {
          cum += p;
          routes_[k].push_back({cum, l});
        }
      }
    }
    total_arrival_ = acc;
    if (!initial.empty()) {
      if (initial.size() != k_count) throw InputError("initial state has the wrong length");
      for (std::size_t k = 0; k < k_count; ++k) {
        if (initial[k] < 0) throw InputError("initial state must be nonnegative");
        queue_[k] = initial[k];
      }
    }
    for (std::size_t j = 0; j < stations_.size(); ++j) refresh(j);
  }

  double event_rate() const { return total_arrival_ + service_rate_; }
  const std::vector<std::int64_t>& queue() const { return queue_; }
  const std::vector<int>& served() const { return served_; }
  std::int64_t total() const { return total_; }

  double draw_holding_time() { return rng_.exponential(event_rate()); }

  // Applies one event drawn in proportion to the current rates.
  void fire() {
    double x = rng_.uniform() * event_rate();
    if (x < total_arrival_) {
      auto it = std::upper_bound(arrival_cumulative_.begin(), arrival_cumulative_.end(), x);
      std::size_t k = static_cast<std::size_t>(it - arrival_cumulative_.begin());
      if (k >= queue_.size()) k = queue_.size() - 1;
      add(k, +1);
      return;
    }
    x -= total_arrival_;
    int chosen = -1;
    for (int k : served_) {
      if (k < 0) continue;
      chosen = k;
      if (x < mu_[static_cast<std::size_t>(k)]) break;
      x -= mu_[static_cast<std::size_t>(k)];
    }
    const auto k = static_cast<std::size_t>(chosen);
    add(k, -1);
    const double u = rng_.uniform();
    for (const auto& r : routes_[k]) {
      if (u < r.cumulative) {
        add(r.to, +1);
        break;
      }
    }
  }

 private:
  void add(std::size_t k, int delta) {
    queue_[k] += delta;
    total_ += delta;
    refresh(station_of_[k]);
  }

  void refresh(std::size_t j) {
    const int before = served_[j];
    int now = -1;
    for (std::size_t k : stations_[j]) {
      if (queue_[k] > 0) {
        now = static_cast<int>(k);
        break;
      }
    }
    if (now == before) return;
    if (before >= 0) service_rate_ -= mu_[static_cast<std::size_t>(before)];
    if (now >= 0) service_rate_ += mu_[static_cast<std::size_t>(now)];
    served_[j] = now;
    // Keep the running sum free of drift when a station goes idle.
    if (std::all_of(served_.begin(), served_.end(), [](int s) { return s < 0; })) service_rate_ = 0.0;
  }

  Rng rng_;
  std::vector<std::vector<std::size_t>> stations_;
  std::vector<std::size_t> station_of_;
  std::vector<double> mu_;
  std::vector<double> arrival_cumulative_;
  std::vector<std::vector<Route>> routes_;
  std::vector<std::int64_t> queue_;
  std::vector<int> served_;
  double total_arrival_ = 0.0;
  double service_rate_ = 0.0;
  std::int64_t total_ = 0;
};

void check_config(const NetworkSpec& spec, const SimConfig& config) {
  require_valid(spec);
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon))
    throw InputError("simulation horizon must be positive and finite");
  if (!(config.warmup >= 0.0) || !(config.warmup < config.horizon))
    throw InputError("warmup must satisfy 0 <= warmup < horizon");
  if (config.batches < 2) throw InputError("at least 2 batches are required");
}

}  // namespace

SimStats simulate(const NetworkSpec& spec, const SimConfig& config) {
  check_config(spec, config);
  Engine engine(spec, config.initial_state, config.seed);
  const std::size_t k_count = spec.num_classes();

  const double window = config.horizon - config.warmup;
  const double batch_len = window / static_cast<double>(config.batches);
  std::vector<double> class_area(k_count, 0.0);
  std::vector<double> batch_area(config.batches, 0.0);

  SimStats stats;
  stats.seed = config.seed;

  // Integrates the current state over [from, to) clipped to the window.
  auto accumulate = [&](double from, double to) {
    const double a = std::max(from, config.warmup);
    const double b = std::min(to, config.horizon);
    if (!(b > a)) return;
    const auto& q = engine.queue();
    for (std::size_t k = 0; k < k_count; ++k) class_area[k] += static_cast<double>(q[k]) * (b - a);
    const double total = static_cast<double>(engine.total());
    if (total == 0.0) return;
    double lo = a;
    auto batch = std::min(static_cast<std::size_t>((lo - config.warmup) / batch_len), config.batches - 1);
    while (lo < b) {
      const double batch_end = batch + 1 == config.batches
                                   ? config.horizon
                                   : config.warmup + static_cast<double>(batch + 1) * batch_len;
      const double hi = std::min(b, batch_end);
      batch_area[batch] += total * (hi - lo);
      lo = hi;
      if (batch + 1 < config.batches) ++batch;
      else break;
    }
  };

  double t = 0.0;
  while (t < config.horizon) {
    if (engine.event_rate() <= 0.0) {
      accumulate(t, config.horizon);
      t = config.horizon;
      break;
    }
    const double next = t + engine.draw_holding_time();
    accumulate(t, next);
    if (next >= config.horizon) break;
    engine.fire();
    ++stats.events;
    t = next;
  }

  stats.per_class_means.resize(k_count);
  double total_area = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    stats.per_class_means[k] = class_area[k] / window;
    total_area += class_area[k];
  }
  stats.mean_total_queue = total_area / window;
  stats.batch_means.resize(config.batches);
  for (std::size_t b = 0; b < config.batches; ++b) stats.batch_means[b] = batch_area[b] / batch_len;
  stats.ci_halfwidth = mean_ci_halfwidth(stats.batch_means);
  stats.final_queue = engine.queue();
  stats.diverged = config.batches >= kMinDivergenceBatches && divergence_test(stats.batch_means);
  return stats;
}

std::vector<SimStats> simulate_replications(const NetworkSpec& spec, const SimConfig& config,
                                            std::size_t replications, std::size_t threads) {
  check_config(spec, config);
  std::vector<SimStats> out(replications);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(replications, 1));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t r = next++; r < replications; r = next++) {
      SimConfig c = config;
      c.seed = derive_stream_seed(config.seed, r);
      try {
        out[r] = simulate(spec, c);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

bool divergence_test(const std::vector<double>& batch_means) {
  const std::size_t n = batch_means.size();
  if (n < kMinDivergenceBatches)
    throw InsufficientBatches("divergence test needs at least " + std::to_string(kMinDivergenceBatches) +
                              " batches, got " + std::to_string(n));
  const double nd = static_cast<double>(n);
  const double x_mean = (nd - 1.0) / 2.0;
  const double y_mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / nd;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxx += dx * dx;
    sxy += dx * (batch_means[i] - y_mean);
  }
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = y_mean + slope * (static_cast<double>(i) - x_mean);
    sse += (batch_means[i] - fit) * (batch_means[i] - fit);
  }
  const double se = std::sqrt(sse / (nd - 2.0) / sxx);
  double t_stat;
  if (se > 0.0) t_stat = slope / se;
  else t_stat = slope > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return t_stat > kDivergenceSlopeT && batch_means.back() > kDivergenceGrowthRatio * batch_means.front();
}

double mean_ci_halfwidth(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / nd;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));
  const boost::math::students_t dist(nd - 1.0);
  return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(nd);
}

std::vector<std::vector<std::int64_t>> sample_path(const NetworkSpec& spec,
                                                   const std::vector<std::int64_t>& initial,
                                                   const std::vector<double>& times,
                                                   std::uint64_t seed) {
  require_valid(spec);
  if (!std::is_sorted(times.begin(), times.end())) throw InputError("sample times must be sorted");
  Engine engine(spec, initial, seed);
  std::vector<std::vector<std::int64_t>> out;
  out.reserve(times.size());
  std::size_t idx = 0;
  double t = 0.0;
  while (idx < times.size()) {
    const double next = engine.event_rate() > 0.0 ? t + engine.draw_holding_time()
                                                  : std::numeric_limits<double>::infinity();
    while (idx < times.size() && times[idx] < next) {
      out.push_back(engine.queue());
      ++idx;
    }
    if (idx == times.size()) break;
    engine.fire();
    t = next;
  }
  return out;
}

std::vector<TraceEvent> trace_events(const NetworkSpec& spec, const std::vector<std::int64_t>& initial,
                                     std::size_t max_events, std::uint64_t seed) {
  require_valid(spec);
  Engine engine(spec, initial, seed);
  std::vector<TraceEvent> out;
  out.push_back({0.0, engine.queue(), engine.served()});
  double t = 0.0;
  while (out.size() <= max_events && engine.event_rate() > 0.0) {
    t += engine.draw_holding_time();
    engine.fire();
    out.push_back({t, engine.queue(), engine.served()});
  }
  return out;
}

}  // namespace mcqn
