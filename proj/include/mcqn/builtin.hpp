#pragma once

// The four reference topologies and structural recognition of them.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcqn/network.hpp"

namespace mcqn {

enum class Topology { Krss, ModifiedKrss, Lk, ModifiedLk };

std::string_view topology_name(Topology t);
/// Accepts "krss", "modified-krss", "lk", "modified-lk". Throws InputError.
Topology parse_topology(std::string_view name);

struct BuiltinOverrides {
  std::optional<std::vector<double>> arrival_rates;
  std::optional<std::vector<double>> mean_service;
};

/// Builds one of the reference networks.
///
///   krss           2 stations, routes 1->2 and 3->4, pi = (4,1,2,3).
///                  Defaults alpha = (1,0,1,0), m = (0.2,0.6,0.2,0.6).
///   modified-krss  krss with regulator classes 5 (1->5->2) and 6 (3->6->4)
///                  at stations 3 and 4, and single-visit classes 7 and 8
///                  that outrank them there. Defaults are alpha1 = alpha3 = 1,
///                  alpha7 = alpha8 = 8/9, m = (0.2,0.6,0.2,0.6,0.1,0.1,1,1).
///   lk             route 1->2->3->4 over stations (1,2,2,1), pi = (4,1,2,3).
///                  Defaults alpha = (1,0,0,0), m = (0.1,0.6,0.1,0.6).
///   modified-lk    route 6->1->5->2->3->4; classes 5 and 6 share station 3
///                  with 6 on top. Defaults alpha6 = 1.37,
///                  m = (0.1,0.6,0.1,0.6,0.7,0.027).
///
/// Throws InputError when an override vector has the wrong length.
NetworkSpec builtin_network(Topology topology, const BuiltinOverrides& overrides = {});

/// Modified KRSS with alpha1 = alpha3 = 1 and alpha7 = alpha8 = alpha_prime.
NetworkSpec modified_krss_family(double alpha_prime);
/// Modified LK with m = (0.1,0.6,0.1,0.6,0.7,0.027) and the given alpha6.
NetworkSpec modified_lk_family(double alpha6);

/// An isomorphism from a reference topology onto a spec.
/// `class_of[c]` is the input class playing canonical class c.
struct TopologyMatch {
  Topology topology;
  std::vector<std::size_t> class_of;
  std::vector<std::size_t> station_of;  // canonical station -> spec station
};

/// Finds a relabeling under which `spec` has exactly the routing, station
/// partition, within-station priority order and external-arrival pattern
/// of `topology`. Rates and service times are free.
std::optional<TopologyMatch> match_topology(const NetworkSpec& spec, Topology topology);

/// Tries all four reference topologies in declaration order.
std::optional<TopologyMatch> identify_topology(const NetworkSpec& spec);

/// `spec` relabeled into the canonical class and station order of `match`.
NetworkSpec canonical_view(const NetworkSpec& spec, const TopologyMatch& match);

}  // namespace mcqn
