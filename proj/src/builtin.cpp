#include "mcqn/builtin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mcqn {

namespace {

struct Template {
  std::size_t stations;
  std::vector<std::size_t> station_of;  // 1-based in the table below
  std::vector<std::pair<std::size_t, std::size_t>> routes;
  std::vector<int> priority;
  std::vector<double> arrival_rates;
  std::vector<double> mean_service;
};

Template make_template(Topology t) {
  switch (t) {
    case Topology::Krss:
      return {2, {1, 2, 2, 1}, {{1, 2}, {3, 4}}, {4, 1, 2, 3},
              {1, 0, 1, 0}, {0.2, 0.6, 0.2, 0.6}};
    case Topology::ModifiedKrss:
      return {4,
              {1, 2, 2, 1, 3, 4, 3, 4},
              {{1, 5}, {5, 2}, {3, 6}, {6, 4}},
              {4, 1, 2, 3, 6, 8, 5, 7},
              {1, 0, 1, 0, 0, 0, 8.0 / 9.0, 8.0 / 9.0},
              {0.2, 0.6, 0.2, 0.6, 0.1, 0.1, 1.0, 1.0}};
    case Topology::Lk:
      return {2, {1, 2, 2, 1}, {{1, 2}, {2, 3}, {3, 4}}, {4, 1, 2, 3},
              {1, 0, 0, 0}, {0.1, 0.6, 0.1, 0.6}};
    case Topology::ModifiedLk:
      return {3,
              {1, 2, 2, 1, 3, 3},
              {{6, 1}, {1, 5}, {5, 2}, {2, 3}, {3, 4}},
              {4, 1, 2, 3, 6, 5},
              {0, 0, 0, 0, 0, 1.37},
              {0.1, 0.6, 0.1, 0.6, 0.7, 0.027}};
  }
  throw InputError("unknown topology");
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool same_prob(double a, double b) { return std::abs(a - b) <= 1e-12; }

}  // namespace

std::string_view topology_name(Topology t) {
  switch (t) {
    case Topology::Krss: return "krss";
    case Topology::ModifiedKrss: return "modified-krss";
    case Topology::Lk: return "lk";
    case Topology::ModifiedLk: return "modified-lk";
  }
  return "?";
}

Topology parse_topology(std::string_view name) {
  for (auto t : {Topology::Krss, Topology::ModifiedKrss, Topology::Lk, Topology::ModifiedLk})
    if (topology_name(t) == name) return t;
  throw InputError("unknown builtin network '" + std::string(name) +
                   "' (expected krss, modified-krss, lk or modified-lk)");
}

NetworkSpec builtin_network(Topology topology, const BuiltinOverrides& overrides) {
  const Template tpl = make_template(topology);
  const std::size_t k_count = tpl.station_of.size();

  NetworkSpec spec;
  spec.num_stations = tpl.stations;
  spec.station_of.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) spec.station_of[k] = tpl.station_of[k] - 1;
  spec.routing = Matrix::Zero(static_cast<Eigen::Index>(k_count), static_cast<Eigen::Index>(k_count));
  for (auto [from, to] : tpl.routes)
    spec.routing(static_cast<Eigen::Index>(from - 1), static_cast<Eigen::Index>(to - 1)) = 1.0;
  spec.priority = tpl.priority;

  auto pick = [&](const std::optional<std::vector<double>>& o, const std::vector<double>& dflt,
                  const char* what) {
    if (!o) return to_vector(dflt);
    if (o->size() != k_count)
      throw InputError(std::string(what) + " override has length " + std::to_string(o->size()) +
                       " but " + std::string(topology_name(topology)) + " has " +
                       std::to_string(k_count) + " classes");
    return to_vector(*o);
  };
  spec.arrival_rates = pick(overrides.arrival_rates, tpl.arrival_rates, "arrival rate");
  spec.mean_service = pick(overrides.mean_service, tpl.mean_service, "mean service");
  return spec;
}

NetworkSpec modified_krss_family(double alpha_prime) {
  BuiltinOverrides o;
  o.arrival_rates = std::vector<double>{1, 0, 1, 0, 0, 0, alpha_prime, alpha_prime};
  return builtin_network(Topology::ModifiedKrss, o);
}

NetworkSpec modified_lk_family(double alpha6) {
  BuiltinOverrides o;
  o.arrival_rates = std::vector<double>{0, 0, 0, 0, 0, alpha6};
  return builtin_network(Topology::ModifiedLk, o);
}

std::optional<TopologyMatch> match_topology(const NetworkSpec& spec, Topology topology) {
  const NetworkSpec ref = builtin_network(topology);
  const std::size_t k_count = ref.num_classes();
  if (spec.num_classes() != k_count || spec.num_stations != ref.num_stations) return std::nullopt;
  if (static_cast<std::size_t>(spec.routing.rows()) != k_count ||
      static_cast<std::size_t>(spec.routing.cols()) != k_count ||
      spec.priority.size() != k_count ||
      static_cast<std::size_t>(spec.arrival_rates.size()) != k_count)
    return std::nullopt;

  std::vector<std::size_t> perm(k_count);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    std::vector<std::size_t> station_map(ref.num_stations, spec.num_stations);
    for (std::size_t c = 0; c < k_count && ok; ++c) {
      const std::size_t s = perm[c];
      if (ref.arrival_rates[c] == 0.0 && spec.arrival_rates[s] != 0.0) ok = false;
      auto& mapped = station_map[ref.station_of[c]];
      if (mapped == spec.num_stations) mapped = spec.station_of[s];
      else if (mapped != spec.station_of[s]) ok = false;
      for (std::size_t d = 0; d < k_count && ok; ++d) {
        if (!same_prob(spec.routing(s, perm[d]), ref.routing(c, d))) ok = false;
        if (ref.station_of[c] == ref.station_of[d] &&
            (ref.priority[c] < ref.priority[d]) != (spec.priority[s] < spec.priority[perm[d]]))
          ok = false;
      }
    }
    if (ok) {
      std::vector<std::size_t> seen = station_map;
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) == seen.end())
        return TopologyMatch{topology, perm, station_map};
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::nullopt;
}

std::optional<TopologyMatch> identify_topology(const NetworkSpec& spec) {
  for (auto t : {Topology::Krss, Topology::ModifiedKrss, Topology::Lk, Topology::ModifiedLk})
    if (auto m = match_topology(spec, t)) return m;
  return std::nullopt;
}

NetworkSpec canonical_view(const NetworkSpec& spec, const TopologyMatch& match) {
  const std::size_t k_count = match.class_of.size();
  std::vector<std::size_t> canonical_station(spec.num_stations);
  for (std::size_t j = 0; j < match.station_of.size(); ++j) canonical_station[match.station_of[j]] = j;

  NetworkSpec out;
  out.num_stations = spec.num_stations;
  out.arrival_rates.resize(static_cast<Eigen::Index>(k_count));
  out.mean_service.resize(static_cast<Eigen::Index>(k_count));
  out.station_of.resize(k_count);
  out.priority.resize(k_count);
  out.routing.resize(static_cast<Eigen::Index>(k_count), static_cast<Eigen::Index>(k_count));
  for (std::size_t c = 0; c < k_count; ++c) {
    const std::size_t s = match.class_of[c];
    out.arrival_rates[static_cast<Eigen::Index>(c)] = spec.arrival_rates[static_cast<Eigen::Index>(s)];
    out.mean_service[static_cast<Eigen::Index>(c)] = spec.mean_service[static_cast<Eigen::Index>(s)];
    out.station_of[c] = canonical_station[spec.station_of[s]];
    out.priority[c] = spec.priority[s];
    for (std::size_t d = 0; d < k_count; ++d)
      out.routing(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) =
          spec.routing(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(match.class_of[d]));
  }
  return out;
}

}  // namespace mcqn
