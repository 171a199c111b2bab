#pragma once

// Network spec files:
//
//   {
//     "stations": 2,
//     "classes": [ {"id": 1, "station": 1, "arrival_rate": 1.0,
//                   "mean_service": 0.2, "priority_rank": 4}, ... ],
//     "routing": [ [1, 2, 1.0], ... ]          // [from, to, probability]
//   }
//
// Ids are 1-based; class ids must be exactly 1..K (any order). Omitted
// routing pairs are 0. An optional "name" string is carried through.

#include <iosfwd>
#include <string>

#include "mcqn/network.hpp"

namespace mcqn {

inline constexpr const char* kSpecFormatVersion = "1";

/// Throws InputError on malformed JSON or schema violations. Numeric
/// invariants are left to validate_network.
NetworkSpec parse_network_json(const std::string& text);

/// Reads a file, or `stdin_stream` when `path` is "-".
NetworkSpec load_network(const std::string& path, std::istream& stdin_stream);
NetworkSpec load_network(const std::string& path);

std::string network_to_json(const NetworkSpec& spec, const std::string& name = "");

}  // namespace mcqn
