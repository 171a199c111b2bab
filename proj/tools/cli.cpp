#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mcqn/builtin.hpp"
#include "mcqn/classify.hpp"
#include "mcqn/des.hpp"
#include "mcqn/experiments.hpp"
#include "mcqn/fluid.hpp"
#include "mcqn/format.hpp"
#include "mcqn/lyapunov.hpp"
#include "mcqn/network.hpp"
#include "mcqn/spec_io.hpp"

namespace mcqn::cli {

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

struct Globals {
  std::string network;
  std::string out;
  std::uint64_t seed = 42;
  bool quiet = false;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  std::istream& in;
  const Globals& g;

  NetworkSpec network() const {
    if (g.network.empty()) throw InputError("--network is required for this subcommand");
    return load_network(g.network, in);
  }

  NetworkSpec valid_network() const {
    NetworkSpec spec = network();
    require_valid(spec);
    return spec;
  }

  void note(const std::string& line) const {
    if (!g.quiet) err << line << '\n';
  }
};

// Destination for the main product: --out file or the output stream.
class Sink {
 public:
  explicit Sink(const Io& io) {
    if (!io.g.out.empty() && io.g.out != "-") {
      file_ = std::make_unique<std::ofstream>(io.g.out, std::ios::binary);
      if (!*file_) throw InputError("cannot open output file '" + io.g.out + "'");
      stream_ = file_.get();
    } else {
      stream_ = &io.out;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::string num(double v) { return format_number(v); }

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::int64_t> to_counts(const std::vector<double>& v) {
  std::vector<std::int64_t> out;
  for (double x : v) {
    if (!(x >= 0.0) || x != std::floor(x) || x > 1e15)
      throw InputError("initial queue lengths must be nonnegative integers");
    out.push_back(static_cast<std::int64_t>(x));
  }
  return out;
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Stable: return kExitOk;
    case Verdict::Unstable: return kExitUnstable;
    case Verdict::Indeterminate: return kExitIndeterminate;
  }
  return kExitIndeterminate;
}

int outcome_exit(FluidOutcome o) {
  switch (o) {
    case FluidOutcome::Emptied: return kExitOk;
    case FluidOutcome::Diverging: return kExitUnstable;
    case FluidOutcome::HorizonReached: return kExitIndeterminate;
  }
  return kExitIndeterminate;
}

int probe_exit(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::Stable: return kExitOk;
    case ProbeVerdict::Diverging: return kExitUnstable;
    case ProbeVerdict::Inconclusive: return kExitIndeterminate;
  }
  return kExitIndeterminate;
}

int cmd_validate(const Io& io) {
  const NetworkSpec spec = io.network();
  const ValidationReport report = validate_network(spec);
  Sink sink(io);
  if (report.ok()) {
    *sink << "valid\t" << spec.num_stations << " stations, " << spec.num_classes() << " classes\n";
    return kExitOk;
  }
  for (const auto& v : report.violations) *sink << "violation\t" << v.rule << ": " << v.detail << '\n';
  io.err << "mcqn: error: network spec has " << report.violations.size() << " violation(s)\n";
  return kExitError;
}

int cmd_traffic(const Io& io) {
  const NetworkSpec spec = io.valid_network();
  const TrafficSummary t = traffic_solve(spec);
  Sink sink(io);
  *sink << "class\tstation\tlambda\tbeta\n";
  for (std::size_t k = 0; k < spec.num_classes(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    *sink << k + 1 << '\t' << spec.station_of[k] + 1 << '\t' << num(t.lambda[i]) << '\t' << num(t.beta[i])
          << '\n';
  }
  *sink << "\nstation\trho\n";
  for (Eigen::Index j = 0; j < t.rho.size(); ++j) *sink << j + 1 << '\t' << num(t.rho[j]) << '\n';
  return kExitOk;
}

int cmd_classify(const Io& io) {
  const NetworkSpec spec = io.valid_network();
  const StabilityVerdict v = classify(spec);
  Sink sink(io);
  *sink << "verdict\t" << verdict_name(v.verdict) << '\n';
  *sink << "reason\t" << v.reason << '\n';
  for (const auto& [name, value] : v.witness_values) *sink << name << '\t' << num(value) << '\n';
  return verdict_exit(v.verdict);
}

void write_trajectory_csv(std::ostream& os, const FluidTrajectory& traj, std::size_t k_count) {
  os << 't';
  for (std::size_t k = 1; k <= k_count; ++k) os << ",q_" << k;
  for (std::size_t k = 1; k <= k_count; ++k) os << ",u_" << k;
  os << ",event\n";
  for (const auto& bp : traj.breakpoints) {
    os << num(bp.state.t);
    for (Eigen::Index i = 0; i < bp.state.levels.size(); ++i) os << ',' << num(bp.state.levels[i]);
    for (Eigen::Index i = 0; i < bp.rates.size(); ++i) os << ',' << num(bp.rates[i]);
    os << ',' << bp.event << '\n';
  }
}

void write_reading(std::ostream& os, const DriftReading& r) {
  os << r.name << "\t" << (r.pass() ? "pass" : "fail") << " segments=" << r.segments_checked
     << " violations=" << r.violations << " worst_slope=" << num(r.worst_slope) << '\n';
}

void write_audit(std::ostream& os, const AuditReport& a) {
  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string("unreached"); };
  os << "audit\t" << (a.ok() ? "pass" : "fail") << '\n';
  os << "tau1\t" << opt(a.tau1) << '\n';
  os << "tau2\t" << opt(a.tau2) << '\n';
  os << "tau1_bound\t" << num(a.tau1_bound) << '\n';
  os << "tau1_within_bound\t" << (a.tau1_within_bound ? "true" : "false") << '\n';
  write_reading(os, a.station_reading);
  write_reading(os, a.class_reading);
  for (const auto& b : a.boundary)
    os << "boundary " << b.label << "\theld " << b.held << " of " << b.evaluated << '\n';
  for (const auto& f : a.failures) os << "failure\t" << f << '\n';
}

struct FluidArgs {
  std::string q0;
  double horizon = 1000.0;
  std::size_t probe = 0;
  bool audit = false;
};

int cmd_fluid(const Io& io, const FluidArgs& a) {
  const NetworkSpec spec = io.valid_network();
  if (!(a.horizon > 0.0)) throw InputError("--horizon must be positive");

  if (a.probe > 0) {
    std::vector<FluidTrajectory> trajs;
    const ProbeResult res = stability_probe(spec, a.probe, a.horizon, io.g.seed, a.audit ? &trajs : nullptr);
    Sink sink(io);
    *sink << "verdict\t" << probe_verdict_name(res.verdict) << '\n';
    *sink << "max_emptying_time\t" << num(res.max_emptying_time) << "\n\n";
    *sink << "sample,outcome,tau,breakpoints" << (a.audit ? ",audit,tau1,tau2" : "") << '\n';
    bool audits_ok = true;
    for (std::size_t i = 0; i < res.samples.size(); ++i) {
      const ProbeSample& s = res.samples[i];
      *sink << s.label << ',' << fluid_outcome_name(s.outcome) << ','
            << (s.outcome == FluidOutcome::Emptied ? num(s.emptied_at) : std::string("inf")) << ','
            << s.breakpoints;
      if (a.audit) {
        const AuditReport rep = lyapunov_audit(spec, trajs[i]);
        audits_ok = audits_ok && rep.ok();
        *sink << ',' << (rep.ok() ? "pass" : "fail") << ',' << (rep.tau1 ? num(*rep.tau1) : "unreached")
              << ',' << (rep.tau2 ? num(*rep.tau2) : "unreached");
      }
      *sink << '\n';
    }
    const int code = probe_exit(res.verdict);
    if (code == kExitOk && !audits_ok) return kExitIndeterminate;
    return code;
  }

  if (a.q0.empty()) throw InputError("fluid needs --q0 or --probe");
  const Vector q0 = to_vector(parse_number_list(a.q0));
  if (static_cast<std::size_t>(q0.size()) != spec.num_classes())
    throw InputError("--q0 has " + std::to_string(q0.size()) + " entries, network has " +
                     std::to_string(spec.num_classes()) + " classes");
  const FluidTrajectory traj = fluid_solve(spec, q0, a.horizon);
  Sink sink(io);
  if (a.audit) {
    const AuditReport rep = lyapunov_audit(spec, traj);
    *sink << "outcome\t" << fluid_outcome_name(traj.outcome) << '\n';
    write_audit(*sink, rep);
    if (traj.outcome != FluidOutcome::Emptied) return outcome_exit(traj.outcome);
    return rep.ok() ? kExitOk : kExitIndeterminate;
  }
  write_trajectory_csv(*sink, traj, spec.num_classes());
  io.note(std::string("outcome: ") + std::string(fluid_outcome_name(traj.outcome)));
  return outcome_exit(traj.outcome);
}

struct SimulateArgs {
  double horizon = 1e6;
  double warmup = 1e5;
  std::size_t replications = 1;
  std::size_t batches = 20;
  std::size_t threads = 0;
  std::string initial;
};

int cmd_simulate(const Io& io, const SimulateArgs& a) {
  const NetworkSpec spec = io.valid_network();
  if (a.replications == 0) throw InputError("--replications must be at least 1");
  SimConfig cfg;
  cfg.horizon = a.horizon;
  cfg.warmup = a.warmup;
  cfg.seed = io.g.seed;
  cfg.batches = a.batches;
  if (!a.initial.empty()) {
    cfg.initial_state = to_counts(parse_number_list(a.initial));
    if (cfg.initial_state.size() != spec.num_classes())
      throw InputError("--initial length does not match the number of classes");
  }
  const auto reps = simulate_replications(spec, cfg, a.replications, a.threads);
  Sink sink(io);
  *sink << "replication,seed,mean_total_queue,ci_halfwidth,diverged,final_total_queue\n";
  bool any_diverged = false;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const SimStats& s = reps[r];
    const auto final_total = std::accumulate(s.final_queue.begin(), s.final_queue.end(), std::int64_t{0});
    *sink << r + 1 << ',' << s.seed << ',' << num(s.mean_total_queue) << ',' << num(s.ci_halfwidth) << ','
          << (s.diverged ? "true" : "false") << ',' << final_total << '\n';
    any_diverged = any_diverged || s.diverged;
  }
  if (reps.size() >= 2) {
    std::vector<double> means;
    for (const auto& s : reps) means.push_back(s.mean_total_queue);
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    io.note("mean_total_queue over replications: " + num(mean) + " +/- " + num(mean_ci_halfwidth(means)));
  }
  return any_diverged ? kExitUnstable : kExitOk;
}

struct SweepArgs {
  std::string family = "modified-krss";
  std::string grid;
  bool figure3 = false;
  double horizon = 2e6;
  double warmup = 2e5;
  std::size_t replications = 8;
  std::size_t batches = 20;
  std::size_t probe_samples = 20;
  double probe_horizon = 1e4;
  std::size_t threads = 0;
};

int cmd_sweep(const Io& io, const SweepArgs& a) {
  const Family family = parse_family(a.family);
  std::vector<double> grid;
  if (a.figure3) {
    if (family != Family::ModifiedKrss) throw InputError("--figure3 applies to the modified-krss family");
    if (!a.grid.empty()) throw InputError("--figure3 and --grid are mutually exclusive");
    grid = figure3_grid();
  } else {
    if (a.grid.empty()) throw InputError("sweep needs --grid or --figure3");
    grid = parse_grid(a.grid);
  }
  if (a.replications == 0) throw InputError("--replications must be at least 1");
  SweepOptions opt;
  opt.sim.horizon = a.horizon;
  opt.sim.warmup = a.warmup;
  opt.sim.seed = io.g.seed;
  opt.sim.batches = a.batches;
  opt.replications = a.replications;
  opt.probe_samples = a.probe_samples;
  opt.probe_horizon = a.probe_horizon;
  opt.threads = a.threads;
  const auto records = sweep_admission(family, grid, opt);
  Sink sink(io);
  write_sweep_csv(*sink, records);
  int code = kExitOk;
  for (const auto& r : records) {
    if (!r.fluid_error.empty()) io.note("fluid probe at " + num(r.param) + ": " + one_line(r.fluid_error));
    if (!r.error.empty()) {
      io.err << "mcqn: error: at " << num(r.param) << ": " << one_line(r.error) << '\n';
      code = kExitError;
    }
  }
  return code;
}

struct BuiltinArgs {
  std::string name;
  bool emit = false;
  std::string alpha;
  std::string m;
};

int cmd_builtin(const Io& io, const BuiltinArgs& a) {
  Sink sink(io);
  if (a.name.empty()) {
    for (Topology t : {Topology::Krss, Topology::ModifiedKrss, Topology::Lk, Topology::ModifiedLk})
      *sink << topology_name(t) << '\n';
    return kExitOk;
  }
  BuiltinOverrides ov;
  if (!a.alpha.empty()) ov.arrival_rates = parse_number_list(a.alpha);
  if (!a.m.empty()) ov.mean_service = parse_number_list(a.m);
  const Topology t = parse_topology(a.name);
  const NetworkSpec spec = builtin_network(t, ov);
  if (a.emit) {
    *sink << network_to_json(spec, std::string(topology_name(t)));
  } else {
    *sink << topology_name(t) << '\t' << spec.num_stations << " stations, " << spec.num_classes()
          << " classes\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Multiclass queueing networks with preemptive priority", "mcqn"};
  app.set_version_flag("--version", std::string("mcqn ") + MCQN_VERSION + " (spec format " +
                                        kSpecFormatVersion + ")");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--network", g.network, "Network spec JSON file, or - for standard input");
  app.add_option("--out", g.out, "Write the main output to this file");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress informational messages");

  auto* validate = app.add_subcommand("validate", "Check a network spec");
  auto* traffic = app.add_subcommand("traffic", "Solve the traffic equations");
  auto* classify_cmd = app.add_subcommand("classify", "Closed-form stability verdict");

  FluidArgs fa;
  auto* fluid = app.add_subcommand("fluid", "Fluid trajectory, stability probe, drift audit");
  fluid->add_option("--q0", fa.q0, "Initial fluid levels, comma separated");
  fluid->add_option("--horizon", fa.horizon, "Time horizon")->capture_default_str();
  fluid->add_option("--probe", fa.probe, "Run the stability probe with N random starts");
  fluid->add_flag("--audit", fa.audit, "Run the drift audit");

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "Discrete-event simulation");
  simulate_cmd->add_option("--horizon", sa.horizon, "Simulated time")->capture_default_str();
  simulate_cmd->add_option("--warmup", sa.warmup, "Discarded initial time")->capture_default_str();
  simulate_cmd->add_option("--replications", sa.replications)->capture_default_str();
  simulate_cmd->add_option("--batches", sa.batches)->capture_default_str();
  simulate_cmd->add_option("--threads", sa.threads, "0 uses all cores")->capture_default_str();
  simulate_cmd->add_option("--initial", sa.initial, "Initial queue lengths, comma separated");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "Admission-rate sweep");
  sweep->add_option("--family", wa.family, "modified-krss or modified-lk")->capture_default_str();
  sweep->add_option("--grid", wa.grid, "start:stop:step or a comma list");
  sweep->add_flag("--figure3", wa.figure3, "Use the built-in modified-krss grid");
  sweep->add_option("--horizon", wa.horizon)->capture_default_str();
  sweep->add_option("--warmup", wa.warmup)->capture_default_str();
  sweep->add_option("--replications", wa.replications)->capture_default_str();
  sweep->add_option("--batches", wa.batches)->capture_default_str();
  sweep->add_option("--probe-samples", wa.probe_samples)->capture_default_str();
  sweep->add_option("--probe-horizon", wa.probe_horizon)->capture_default_str();
  sweep->add_option("--threads", wa.threads)->capture_default_str();

  BuiltinArgs ba;
  auto* builtin = app.add_subcommand("builtin", "List or export builtin networks");
  builtin->add_option("--name", ba.name, "krss, modified-krss, lk or modified-lk");
  builtin->add_flag("--emit", ba.emit, "Print the network spec JSON");
  builtin->add_option("--alpha", ba.alpha, "Override arrival rates");
  builtin->add_option("--m", ba.m, "Override mean service times");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mcqn: error: " << one_line(e.what()) << '\n';
    return kExitError;
  }

  const Io io{out, err, in, g};
  try {
    if (validate->parsed()) return cmd_validate(io);
    if (traffic->parsed()) return cmd_traffic(io);
    if (classify_cmd->parsed()) return cmd_classify(io);
    if (fluid->parsed()) return cmd_fluid(io, fa);
    if (simulate_cmd->parsed()) return cmd_simulate(io, sa);
    if (sweep->parsed()) return cmd_sweep(io, wa);
    if (builtin->parsed()) return cmd_builtin(io, ba);
  } catch (const std::exception& e) {
    err << "mcqn: error: " << one_line(e.what()) << '\n';
    return kExitError;
  }
  err << "mcqn: error: no subcommand\n";
  return kExitError;
}

}  // namespace mcqn::cli
