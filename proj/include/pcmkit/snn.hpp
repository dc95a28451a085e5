#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "pcmkit/errors.hpp"

namespace pcmkit {

struct Neuron {
  std::uint64_t id = 0;
  std::uint64_t spikes = 0;  // spikes propagated over the evaluation window

  bool operator==(const Neuron&) const = default;
};

struct Synapse {
  std::uint64_t pre = 0;
  std::uint64_t post = 0;

  bool operator==(const Synapse&) const = default;
};

/// Spiking network workload: neurons carry externally measured spike
/// counts, synapses reference neuron ids. Neuron order follows the file.
struct SnnGraph {
  std::vector<Neuron> neurons;
  std::vector<Synapse> synapses;

  bool operator==(const SnnGraph&) const = default;

  /// id -> position in `neurons`.
  std::unordered_map<std::uint64_t, std::size_t> index_by_id() const {
    std::unordered_map<std::uint64_t, std::size_t> idx;
    idx.reserve(neurons.size());
    for (std::size_t i = 0; i < neurons.size(); ++i) idx.emplace(neurons[i].id, i);
    return idx;
  }
};

/// Parses the JSON SNN format:
///   { "neurons": [{"id": u, "spikes": s}], "synapses": [{"pre": u, "post": v}] }
inline SnnGraph parse_snn(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, std::string("snn: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("neurons") || !j.contains("synapses") ||
      !j["neurons"].is_array() || !j["synapses"].is_array())
    throw Error(Errc::Io, "snn: expected object with neurons[] and synapses[]");

  SnnGraph graph;
  std::unordered_map<std::uint64_t, std::size_t> seen;
  for (const auto& jn : j["neurons"]) {
    if (!jn.is_object() || !jn.contains("id") || !jn.contains("spikes") ||
        !jn["id"].is_number_integer() || !jn["spikes"].is_number_integer())
      throw Error(Errc::Io, "snn: neuron entries need integer id and spikes");
    Neuron n;
    n.id = jn["id"].get<std::uint64_t>();
    const auto spikes = jn["spikes"].get<std::int64_t>();
    if (spikes < 0)
      throw Error(Errc::NegativeSpikeCount,
                  "snn: neuron " + std::to_string(n.id) + " has negative spike count");
    n.spikes = static_cast<std::uint64_t>(spikes);
    if (!seen.emplace(n.id, graph.neurons.size()).second)
      throw Error(Errc::DuplicateNeuron, "snn: duplicate neuron id " + std::to_string(n.id));
    graph.neurons.push_back(n);
  }
  for (const auto& js : j["synapses"]) {
    if (!js.is_object() || !js.contains("pre") || !js.contains("post"))
      throw Error(Errc::Io, "snn: synapse entries need pre and post ids");
    Synapse s;
    s.pre = js["pre"].get<std::uint64_t>();
    s.post = js["post"].get<std::uint64_t>();
    if (!seen.count(s.pre) || !seen.count(s.post))
      throw Error(Errc::DanglingSynapse, "snn: synapse (" + std::to_string(s.pre) + "," +
                                             std::to_string(s.post) +
                                             ") references unknown neuron");
    graph.synapses.push_back(s);
  }
  return graph;
}

inline nlohmann::ordered_json to_json(const SnnGraph& graph) {
  nlohmann::ordered_json j;
  j["neurons"] = nlohmann::ordered_json::array();
  for (const auto& n : graph.neurons) j["neurons"].push_back({{"id", n.id}, {"spikes", n.spikes}});
  j["synapses"] = nlohmann::ordered_json::array();
  for (const auto& s : graph.synapses) j["synapses"].push_back({{"pre", s.pre}, {"post", s.post}});
  return j;
}

}  // namespace pcmkit
