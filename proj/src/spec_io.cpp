#include "mcqn/spec_io.hpp"

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace mcqn {

namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + ": missing key '" + key + "'");
  return *it;
}

std::size_t positive_index(const json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw InputError(what + " must be a positive integer");
  return static_cast<std::size_t>(v.get<long long>());
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InputError(what + " must be a number");
  return v.get<double>();
}

}  // namespace

NetworkSpec parse_network_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("network spec must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (key != "stations" && key != "classes" && key != "routing" && key != "name" &&
        key != "format_version")
      throw InputError("unknown key '" + key + "' in network spec");

  NetworkSpec spec;
  spec.num_stations = positive_index(field(doc, "stations", "spec"), "'stations'");

  const json& classes = field(doc, "classes", "spec");
  if (!classes.is_array() || classes.empty()) throw InputError("'classes' must be a nonempty array");
  const std::size_t k_count = classes.size();
  spec.arrival_rates = Vector::Zero(static_cast<Eigen::Index>(k_count));
  spec.mean_service = Vector::Zero(static_cast<Eigen::Index>(k_count));
  spec.station_of.assign(k_count, 0);
  spec.priority.assign(k_count, 0);
  std::vector<bool> seen(k_count, false);
  for (const json& c : classes) {
    if (!c.is_object()) throw InputError("each class must be an object");
    const std::size_t id = positive_index(field(c, "id", "class"), "class 'id'");
    const std::string where = "class " + std::to_string(id);
    if (id > k_count || seen[id - 1]) throw InputError(where + ": ids must be exactly 1.." + std::to_string(k_count));
    seen[id - 1] = true;
    const auto i = static_cast<Eigen::Index>(id - 1);
    for (const auto& [key, _] : c.items())
      if (key != "id" && key != "station" && key != "arrival_rate" && key != "mean_service" &&
          key != "priority_rank")
        throw InputError(where + ": unknown key '" + key + "'");
    spec.station_of[id - 1] = positive_index(field(c, "station", where), where + " station") - 1;
    spec.arrival_rates[i] = number(field(c, "arrival_rate", where), where + " arrival_rate");
    spec.mean_service[i] = number(field(c, "mean_service", where), where + " mean_service");
    const json& rank = field(c, "priority_rank", where);
    if (!rank.is_number_integer()) throw InputError(where + " priority_rank must be an integer");
    spec.priority[id - 1] = rank.get<int>();
  }

  spec.routing = Matrix::Zero(static_cast<Eigen::Index>(k_count), static_cast<Eigen::Index>(k_count));
  if (auto it = doc.find("routing"); it != doc.end()) {
    if (!it->is_array()) throw InputError("'routing' must be an array of [from, to, probability]");
    for (const json& triple : *it) {
      if (!triple.is_array() || triple.size() != 3)
        throw InputError("routing entries must be [from, to, probability]");
      const std::size_t from = positive_index(triple[0], "routing 'from'");
      const std::size_t to = positive_index(triple[1], "routing 'to'");
      if (from > k_count || to > k_count) throw InputError("routing refers to an unknown class");
      spec.routing(static_cast<Eigen::Index>(from - 1), static_cast<Eigen::Index>(to - 1)) +=
          number(triple[2], "routing probability");
    }
  }
  return spec;
}

NetworkSpec load_network(const std::string& path) { return load_network(path, std::cin); }

NetworkSpec load_network(const std::string& path, std::istream& stdin_stream) {
  std::string text;
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(stdin_stream), std::istreambuf_iterator<char>());
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open network file '" + path + "'");
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return parse_network_json(text);
}

std::string network_to_json(const NetworkSpec& spec, const std::string& name) {
  json doc = json::object();
  if (!name.empty()) doc["name"] = name;
  doc["format_version"] = kSpecFormatVersion;
  doc["stations"] = spec.num_stations;
  json classes = json::array();
  for (std::size_t k = 0; k < spec.num_classes(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    classes.push_back({{"id", k + 1},
                       {"station", spec.station_of[k] + 1},
                       {"arrival_rate", spec.arrival_rates[i]},
                       {"mean_service", spec.mean_service[i]},
                       {"priority_rank", spec.priority[k]}});
  }
  doc["classes"] = classes;
  json routing = json::array();
  for (Eigen::Index r = 0; r < spec.routing.rows(); ++r)
    for (Eigen::Index c = 0; c < spec.routing.cols(); ++c)
      if (spec.routing(r, c) != 0.0) routing.push_back({r + 1, c + 1, spec.routing(r, c)});
  doc["routing"] = routing;
  return doc.dump(2) + "\n";
}

}  // namespace mcqn
