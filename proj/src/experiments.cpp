#include "mcqn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mcqn/builtin.hpp"
#include "mcqn/format.hpp"

namespace mcqn {

namespace {

double round12(double v) { return std::round(v * 1e12) / 1e12; }

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

Family parse_family(std::string_view name) {
  if (name == "modified-krss") return Family::ModifiedKrss;
  if (name == "modified-lk") return Family::ModifiedLk;
  throw InputError("unknown family '" + std::string(name) + "' (expected modified-krss or modified-lk)");
}

std::string_view family_name(Family f) {
  return f == Family::ModifiedKrss ? "modified-krss" : "modified-lk";
}

NetworkSpec family_network(Family family, double value) {
  return family == Family::ModifiedKrss ? modified_krss_family(value) : modified_lk_family(value);
}

std::vector<SweepRecord> sweep_admission(Family family, const std::vector<double>& grid,
                                         const SweepOptions& options) {
  std::vector<SweepRecord> records;
  for (double value : grid) {
    SweepRecord rec;
    rec.param = value;
    rec.horizon = options.sim.horizon;
    rec.seed = options.sim.seed;
    try {
      if (!(value >= 0.0)) throw InputError("grid values must be nonnegative");
      const NetworkSpec spec = family_network(family, value);
      require_valid(spec);
      rec.classifier = classify(spec).verdict;
      try {
        rec.fluid_verdict = std::string(probe_verdict_name(
            stability_probe(spec, options.probe_samples, options.probe_horizon, options.sim.seed).verdict));
      } catch (const std::runtime_error& e) {
        rec.fluid_verdict = "Error";
        rec.fluid_error = e.what();
      }

      const TrafficSummary traffic = traffic_solve(spec);
      if (traffic.rho.maxCoeff() >= 1.0) {
        rec.mean_total_queue = std::numeric_limits<double>::infinity();
        rec.ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
        rec.diverged = true;
      } else {
        const auto reps = simulate_replications(spec, options.sim, options.replications, options.threads);
        rec.simulated = true;
        for (const auto& s : reps) {
          rec.replication_means.push_back(s.mean_total_queue);
          rec.diverged = rec.diverged || s.diverged;
        }
        rec.mean_total_queue =
            std::accumulate(rec.replication_means.begin(), rec.replication_means.end(), 0.0) /
            static_cast<double>(rec.replication_means.size());
        rec.ci_halfwidth = reps.size() >= 2 ? mean_ci_halfwidth(rec.replication_means)
                                            : reps.front().ci_halfwidth;
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
      rec.mean_total_queue = std::numeric_limits<double>::quiet_NaN();
      rec.ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
      if (rec.fluid_verdict.empty()) rec.fluid_verdict = "Error";
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<double> figure3_grid() {
  std::vector<double> grid{0.30, 1.0 / 3.0};
  for (int i = 4; i <= 8; ++i) grid.push_back(round12(0.1 * i));
  for (int i = 84; i <= 89; ++i) grid.push_back(round12(0.01 * i));
  return grid;
}

std::vector<SweepRecord> reproduce_figure3(std::ostream& out, const SweepOptions& options,
                                           const std::vector<double>& grid) {
  auto records = sweep_admission(Family::ModifiedKrss, grid, options);
  write_sweep_csv(out, records);
  return records;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : records) {
    out << format_number(r.param) << ',' << format_number(r.mean_total_queue) << ','
        << format_number(r.ci_halfwidth) << ',' << (r.diverged ? "true" : "false") << ','
        << verdict_name(r.classifier) << ',' << r.fluid_verdict << ',' << format_number(r.horizon)
        << ',' << r.seed << '\n';
  }
}

std::vector<double> parse_grid(std::string_view text) {
  if (text.find(':') == std::string_view::npos) return parse_number_list(text);
  const std::size_t c1 = text.find(':');
  const std::size_t c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos || text.find(':', c2 + 1) != std::string_view::npos)
    throw InputError("grid range must look like start:stop:step");
  const double start = parse_number(text.substr(0, c1));
  const double stop = parse_number(text.substr(c1 + 1, c2 - c1 - 1));
  const double step = parse_number(text.substr(c2 + 1));
  if (!(step > 0.0) || stop < start) throw InputError("grid range needs step > 0 and stop >= start");
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  if (count > 1'000'000) throw InputError("grid range has too many points");
  std::vector<double> grid;
  for (long i = 0; i <= count; ++i) grid.push_back(round12(start + static_cast<double>(i) * step));
  return grid;
}

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("spearman needs two equal-length samples");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mcqn
