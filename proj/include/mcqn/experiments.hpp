#pragma once

// Admission-rate sweeps over the two paradox families.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mcqn/classify.hpp"
#include "mcqn/des.hpp"
#include "mcqn/fluid.hpp"

namespace mcqn {

enum class Family { ModifiedKrss, ModifiedLk };

/// "modified-krss" or "modified-lk". Throws InputError.
Family parse_family(std::string_view name);
std::string_view family_name(Family f);

/// The family member at the swept admission rate: alpha7 = alpha8 = value
/// for modified-krss, alpha6 = value for modified-lk.
NetworkSpec family_network(Family family, double value);

struct SweepOptions {
  SimConfig sim{2e6, 2e5, 42, 20, {}};
  std::size_t replications = 8;
  std::size_t probe_samples = 20;
  double probe_horizon = 1e4;
  std::size_t threads = 0;
};

struct SweepRecord {
  double param = 0.0;
  double mean_total_queue = 0.0;
  double ci_halfwidth = 0.0;
  bool diverged = false;
  Verdict classifier = Verdict::Indeterminate;
  std::string fluid_verdict;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  bool simulated = false;
  std::vector<double> replication_means;
  std::string fluid_error;  // probe failure; the simulation still runs
  std::string error;  // nonempty when an engine failed at this point
};

/// One record per grid value, in grid order. Points with a station load
/// >= 1 are marked diverged without simulation. Engine failures are stored
/// in the record and the sweep continues.
std::vector<SweepRecord> sweep_admission(Family family, const std::vector<double>& grid,
                                         const SweepOptions& options = {});

/// 0.30, 1/3, then 0.40 ... 0.80 by 0.1, then 0.84 ... 0.89 by 0.01.
std::vector<double> figure3_grid();

/// Runs the modified-krss sweep on `grid` and writes the CSV to `out`.
std::vector<SweepRecord> reproduce_figure3(std::ostream& out, const SweepOptions& options = {},
                                           const std::vector<double>& grid = figure3_grid());

inline constexpr std::string_view kSweepCsvHeader =
    "param,mean_total_queue,ci_halfwidth,diverged,classifier,fluid_verdict,horizon,seed";

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);

/// Parses "a:b:step" (inclusive, values rounded to 1e-12) or "v1,v2,...".
std::vector<double> parse_grid(std::string_view text);

/// Spearman rank correlation with average ranks for ties.
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mcqn
