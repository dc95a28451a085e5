#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pcmkit/errors.hpp"
#include "pcmkit/rng.hpp"
#include "pcmkit/snn.hpp"

namespace pcmkit {

/// Per-spike aging rates of the three dominant CMOS failure mechanisms.
/// Stress is linear in propagated spikes; the coefficients stay separate
/// for reporting but only their sum enters the model.
struct AgingCoefficients {
  double c_nbti = 1e-6;
  double c_tddb = 1e-6;
  double c_hci = 1e-6;

  double sum() const { return c_nbti + c_tddb + c_hci; }
};

inline double neuron_aging(std::uint64_t spikes, const AgingCoefficients& coeffs) {
  return coeffs.sum() * static_cast<double>(spikes);
}

/// A capacity-bounded group of neurons that fits one tile in its entirety.
/// Synapse load counts synapses incident to any member (each stored
/// synapse occupies a slot in every tile hosting an endpoint); internal
/// counts those fully inside the cluster.
struct Cluster {
  std::uint64_t id = 0;
  std::vector<std::uint64_t> neuron_ids;
  std::uint64_t internal_synapses = 0;
  std::uint64_t incident_synapses = 0;
  std::uint64_t total_spikes = 0;
};

struct TileCaps {
  std::uint64_t neuron_cap = 0;
  std::uint64_t synapse_cap = 0;
};

/// Cluster-to-tile assignment; tile_of[c] is the tile of cluster c.
struct Mapping {
  std::vector<std::uint32_t> tile_of;

  bool operator==(const Mapping&) const = default;
};

struct PsoParams {
  std::uint64_t swarm_size = 32;
  std::uint64_t iterations = 500;
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
  std::uint64_t restarts = 4;
  std::uint64_t seed = 0;
};

inline void validate(const PsoParams& p) {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(Errc::ConfigInvalid, "pso." + field + ": " + why);
  };
  if (p.swarm_size < 2) bad("swarm_size", "must be >= 2");
  if (p.iterations < 1) bad("iterations", "must be >= 1");
  if (!(p.inertia > 0.0) || p.inertia > 1.0) bad("w", "must be in (0,1]");
  if (!(p.cognitive > 0.0)) bad("c1", "must be > 0");
  if (!(p.social > 0.0)) bad("c2", "must be > 0");
  if (p.restarts < 1) bad("restarts", "must be >= 1");
}

enum class ClusterStrategy {
  Bfs,     // breadth-first packing from the lowest unassigned id
  MinCut,  // greedy: absorb the frontier neuron with the most edges inward
};

/// Deterministic capacity-bounded packing from the lowest unassigned id.
/// A neighbor joins the open cluster while both the neuron count and the
/// incident-synapse load stay within the caps; the strategy picks which
/// frontier neuron is absorbed next.
inline std::vector<Cluster> partition_into_clusters(
    const SnnGraph& graph, std::uint64_t neuron_cap, std::uint64_t synapse_cap,
    ClusterStrategy strategy = ClusterStrategy::Bfs) {
  if (neuron_cap < 1 || synapse_cap < 1)
    throw Error(Errc::ConfigInvalid, "cluster caps must be >= 1");
  const auto index = graph.index_by_id();

  // Incident synapse indices per neuron (a self-loop appears once).
  std::vector<std::vector<std::uint32_t>> incident(graph.neurons.size());
  std::vector<std::vector<std::uint64_t>> neighbors(graph.neurons.size());
  for (std::uint32_t s = 0; s < graph.synapses.size(); ++s) {
    const auto& syn = graph.synapses[s];
    const auto pre = index.at(syn.pre);
    const auto post = index.at(syn.post);
    incident[pre].push_back(s);
    if (post != pre) incident[post].push_back(s);
    if (post != pre) {
      neighbors[pre].push_back(syn.post);
      neighbors[post].push_back(syn.pre);
    }
  }
  for (auto& n : neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  for (std::size_t i = 0; i < graph.neurons.size(); ++i)
    if (incident[i].size() > synapse_cap)
      throw Error(Errc::Infeasible, "neuron " + std::to_string(graph.neurons[i].id) +
                                        " has " + std::to_string(incident[i].size()) +
                                        " incident synapses, over the synapse cap");

  std::vector<std::uint64_t> ids;
  ids.reserve(graph.neurons.size());
  for (const auto& n : graph.neurons) ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());

  std::unordered_map<std::uint64_t, std::uint64_t> cluster_of;
  std::vector<Cluster> clusters;
  for (const auto seed_id : ids) {
    if (cluster_of.count(seed_id)) continue;
    Cluster cluster;
    cluster.id = clusters.size();
    std::unordered_set<std::uint32_t> counted;
    std::vector<std::uint64_t> frontier;  // discovery order
    std::unordered_set<std::uint64_t> seen{seed_id};

    auto load_delta_of = [&](std::uint64_t v) {
      std::uint64_t delta = 0;
      for (auto s : incident[index.at(v)])
        if (!counted.count(s)) ++delta;
      return delta;
    };
    auto absorb = [&](std::uint64_t v) {
      const auto vi = index.at(v);
      cluster_of[v] = cluster.id;
      cluster.neuron_ids.push_back(v);
      cluster.incident_synapses += load_delta_of(v);
      cluster.total_spikes += graph.neurons[vi].spikes;
      for (auto s : incident[vi]) counted.insert(s);
      for (auto w : neighbors[vi])
        if (!cluster_of.count(w) && seen.insert(w).second) frontier.push_back(w);
    };

    absorb(seed_id);
    while (cluster.neuron_ids.size() < neuron_cap) {
      std::uint64_t best = 0;
      bool found = false;
      if (strategy == ClusterStrategy::Bfs) {
        for (const auto v : frontier) {
          if (cluster_of.count(v)) continue;
          if (cluster.incident_synapses + load_delta_of(v) > synapse_cap) continue;
          best = v;
          found = true;
          break;
        }
      } else {
        // Most edges back into the cluster wins; ties go to the lowest id.
        std::uint64_t best_gain = 0;
        for (const auto v : frontier) {
          if (cluster_of.count(v)) continue;
          const auto delta = load_delta_of(v);
          if (cluster.incident_synapses + delta > synapse_cap) continue;
          const auto gain = incident[index.at(v)].size() - delta;
          if (!found || gain > best_gain || (gain == best_gain && v < best)) {
            best = v;
            best_gain = gain;
            found = true;
          }
        }
      }
      if (!found) break;
      absorb(best);
    }
    clusters.push_back(std::move(cluster));
  }

  for (const auto& syn : graph.synapses)
    if (cluster_of.at(syn.pre) == cluster_of.at(syn.post))
      clusters[cluster_of.at(syn.pre)].internal_synapses++;
  return clusters;
}

namespace detail {

struct TileLoad {
  std::uint64_t neurons = 0;
  std::uint64_t synapses = 0;
};

inline std::vector<TileLoad> tile_loads(const Mapping& mapping,
                                        const std::vector<Cluster>& clusters,
                                        std::uint32_t n_tiles) {
  std::vector<TileLoad> loads(n_tiles);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    auto& load = loads[mapping.tile_of[c]];
    load.neurons += clusters[c].neuron_ids.size();
    load.synapses += clusters[c].incident_synapses;
  }
  return loads;
}

}  // namespace detail

inline bool is_feasible(const Mapping& mapping, const std::vector<Cluster>& clusters,
                        std::uint32_t n_tiles, const TileCaps& caps) {
  for (const auto& load : detail::tile_loads(mapping, clusters, n_tiles))
    if (load.neurons > caps.neuron_cap || load.synapses > caps.synapse_cap) return false;
  return true;
}

/// Series failure model: the tile ages at the sum of its member neurons'
/// rates.
inline double tile_aging(const Mapping& mapping, std::uint32_t tile,
                         const std::vector<Cluster>& clusters, const AgingCoefficients& coeffs) {
  double total = 0.0;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    if (mapping.tile_of[c] == tile) total += neuron_aging(clusters[c].total_spikes, coeffs);
  return total;
}

inline std::vector<double> per_tile_aging(const Mapping& mapping,
                                          const std::vector<Cluster>& clusters,
                                          std::uint32_t n_tiles,
                                          const AgingCoefficients& coeffs) {
  std::vector<double> aging(n_tiles, 0.0);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    aging[mapping.tile_of[c]] += neuron_aging(clusters[c].total_spikes, coeffs);
  return aging;
}

inline double total_graph_aging(const std::vector<Cluster>& clusters,
                                const AgingCoefficients& coeffs) {
  double total = 0.0;
  for (const auto& c : clusters) total += neuron_aging(c.total_spikes, coeffs);
  return total;
}

/// Max tile aging, plus a capacity-excess penalty scaled far above any
/// feasible value so infeasible mappings always lose.
inline double fitness(const Mapping& mapping, const std::vector<Cluster>& clusters,
                      std::uint32_t n_tiles, const TileCaps& caps,
                      const AgingCoefficients& coeffs) {
  const auto aging = per_tile_aging(mapping, clusters, n_tiles, coeffs);
  double worst = 0.0;
  for (double a : aging) worst = std::max(worst, a);
  std::uint64_t excess = 0;
  for (const auto& load : detail::tile_loads(mapping, clusters, n_tiles)) {
    if (load.neurons > caps.neuron_cap) excess += load.neurons - caps.neuron_cap;
    if (load.synapses > caps.synapse_cap) excess += load.synapses - caps.synapse_cap;
  }
  if (excess == 0) return worst;
  const double total = total_graph_aging(clusters, coeffs);
  const double penalty_rate = total > 0.0 ? 1e6 * total : 1.0;
  return worst + penalty_rate * static_cast<double>(excess);
}

/// Spikes crossing tile boundaries: for every synapse whose endpoints land
/// on different tiles, the presynaptic neuron's spike count is charged.
inline std::uint64_t performance_proxy(const Mapping& mapping, const SnnGraph& graph,
                                       const std::vector<Cluster>& clusters) {
  std::unordered_map<std::uint64_t, std::uint32_t> tile_of_neuron;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (auto id : clusters[c].neuron_ids) tile_of_neuron[id] = mapping.tile_of[c];
  std::unordered_map<std::uint64_t, std::uint64_t> spikes_of;
  for (const auto& n : graph.neurons) spikes_of[n.id] = n.spikes;
  std::uint64_t traffic = 0;
  for (const auto& syn : graph.synapses)
    if (tile_of_neuron.at(syn.pre) != tile_of_neuron.at(syn.post))
      traffic += spikes_of.at(syn.pre);
  return traffic;
}

/// First-fit packing in cluster order; the feasibility check for the
/// optimizers and the seed particle for each PSO restart.
inline std::optional<Mapping> greedy_first_fit(const std::vector<Cluster>& clusters,
                                               std::uint32_t n_tiles, const TileCaps& caps) {
  Mapping mapping;
  mapping.tile_of.resize(clusters.size(), 0);
  std::vector<detail::TileLoad> loads(n_tiles);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    bool placed = false;
    for (std::uint32_t t = 0; t < n_tiles; ++t) {
      if (loads[t].neurons + clusters[c].neuron_ids.size() <= caps.neuron_cap &&
          loads[t].synapses + clusters[c].incident_synapses <= caps.synapse_cap) {
        mapping.tile_of[c] = t;
        loads[t].neurons += clusters[c].neuron_ids.size();
        loads[t].synapses += clusters[c].incident_synapses;
        placed = true;
        break;
      }
    }
    if (!placed) return std::nullopt;
  }
  return mapping;
}

struct PsoResult {
  Mapping mapping;
  double fitness = 0.0;
  /// Per-iteration global-best fitness of the winning restart
  /// (nonincreasing by construction).
  std::vector<double> fitness_trace;
  /// Traces of every restart, winning one included.
  std::vector<std::vector<double>> all_traces;
};

/// Particle swarm over continuous per-cluster positions in [0, n_tiles),
/// decoded by floor-with-clamp. Restarts run independent swarms seeded
/// from substreams of params.seed; particle 0 of each restart starts at
/// the greedy first-fit mapping so a feasible global best exists from
/// iteration zero.
inline PsoResult pso_optimize(const std::vector<Cluster>& clusters, std::uint32_t n_tiles,
                              const TileCaps& caps, const PsoParams& params,
                              const std::function<double(const Mapping&)>& objective) {
  validate(params);
  if (clusters.empty()) throw Error(Errc::Infeasible, "no clusters to map");
  const auto seed_mapping = greedy_first_fit(clusters, n_tiles, caps);
  if (!seed_mapping)
    throw Error(Errc::Infeasible, "no feasible mapping found by greedy first-fit");

  const std::size_t dims = clusters.size();
  const double pos_max = static_cast<double>(n_tiles) - 1e-9;
  auto decode = [&](const std::vector<double>& x) {
    Mapping m;
    m.tile_of.resize(dims);
    for (std::size_t c = 0; c < dims; ++c) {
      const auto t = static_cast<std::int64_t>(std::floor(x[c]));
      m.tile_of[c] = static_cast<std::uint32_t>(
          std::clamp<std::int64_t>(t, 0, static_cast<std::int64_t>(n_tiles) - 1));
    }
    return m;
  };

  PsoResult result;
  result.fitness = std::numeric_limits<double>::infinity();
  for (std::uint64_t restart = 0; restart < params.restarts; ++restart) {
    Rng rng(Rng::substream_seed(params.seed, restart));
    const std::size_t n = params.swarm_size;
    std::vector<std::vector<double>> x(n, std::vector<double>(dims));
    std::vector<std::vector<double>> v(n, std::vector<double>(dims, 0.0));
    std::vector<std::vector<double>> pbest_x(n);
    std::vector<double> pbest_f(n, std::numeric_limits<double>::infinity());
    std::vector<double> gbest_x;
    double gbest_f = std::numeric_limits<double>::infinity();
    Mapping gbest_m;

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dims; ++c)
        x[i][c] = i == 0 ? static_cast<double>(seed_mapping->tile_of[c]) + 0.5
                         : rng.uniform() * static_cast<double>(n_tiles);
      const Mapping m = decode(x[i]);
      const double f = objective(m);
      pbest_x[i] = x[i];
      pbest_f[i] = f;
      if (f < gbest_f) {
        gbest_f = f;
        gbest_x = x[i];
        gbest_m = m;
      }
    }
    std::vector<double> trace{gbest_f};

    for (std::uint64_t iter = 0; iter < params.iterations; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dims; ++c) {
          const double r1 = rng.uniform();
          const double r2 = rng.uniform();
          v[i][c] = params.inertia * v[i][c] + params.cognitive * r1 * (pbest_x[i][c] - x[i][c]) +
                    params.social * r2 * (gbest_x[c] - x[i][c]);
          x[i][c] = std::clamp(x[i][c] + v[i][c], 0.0, pos_max);
        }
        const Mapping m = decode(x[i]);
        const double f = objective(m);
        if (f < pbest_f[i]) {
          pbest_f[i] = f;
          pbest_x[i] = x[i];
        }
        if (f < gbest_f) {
          gbest_f = f;
          gbest_x = x[i];
          gbest_m = m;
        }
      }
      trace.push_back(gbest_f);
    }

    if (gbest_f < result.fitness) {
      result.fitness = gbest_f;
      result.mapping = gbest_m;
      result.fitness_trace = trace;
    }
    result.all_traces.push_back(std::move(trace));
  }
  return result;
}

/// Min-max-aging PSO; the common case.
inline PsoResult pso_optimize(const std::vector<Cluster>& clusters, std::uint32_t n_tiles,
                              const TileCaps& caps, const AgingCoefficients& coeffs,
                              const PsoParams& params) {
  return pso_optimize(clusters, n_tiles, caps, params, [&](const Mapping& m) {
    return fitness(m, clusters, n_tiles, caps, coeffs);
  });
}

struct BruteForceResult {
  Mapping mapping;
  double fitness = 0.0;
};

/// Exhaustive enumeration of all n_tiles^n_clusters assignments in
/// lexicographic order; ties keep the first (lexicographically smallest)
/// optimum. Guarded to 10^7 mappings.
inline BruteForceResult brute_force_optimize(const std::vector<Cluster>& clusters,
                                             std::uint32_t n_tiles, const TileCaps& caps,
                                             const AgingCoefficients& coeffs) {
  if (clusters.empty()) throw Error(Errc::Infeasible, "no clusters to map");
  double space = 1.0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    space *= static_cast<double>(n_tiles);
    if (space > 1e7)
      throw Error(Errc::TooLarge, "search space exceeds 10^7 mappings");
  }

  Mapping current;
  current.tile_of.assign(clusters.size(), 0);
  BruteForceResult best;
  best.fitness = std::numeric_limits<double>::infinity();
  bool found = false;
  for (;;) {
    if (is_feasible(current, clusters, n_tiles, caps)) {
      const auto aging = per_tile_aging(current, clusters, n_tiles, coeffs);
      double worst = 0.0;
      for (double a : aging) worst = std::max(worst, a);
      if (worst < best.fitness) {
        best.fitness = worst;
        best.mapping = current;
        found = true;
      }
    }
    // Odometer with the last cluster fastest: lexicographic order.
    std::size_t d = clusters.size();
    while (d > 0) {
      --d;
      if (++current.tile_of[d] < n_tiles) break;
      current.tile_of[d] = 0;
      if (d == 0) {
        if (!found) throw Error(Errc::Infeasible, "no feasible mapping exists");
        return best;
      }
    }
  }
}

}  // namespace pcmkit
