// pcmkit command line driver: trace synthesis, the PCM and hybrid
// simulators, SNN mapping, and report comparison.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcmkit/pcmkit.hpp"

namespace {

using nlohmann::json;
using namespace pcmkit;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << data;
}

json parse_config_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigInvalid, what + ": invalid JSON: " + e.what());
  }
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  return parse_config_json(read_file(path), path);
}

std::vector<MemoryRequest> load_trace(const std::string& path, std::uint64_t line_bits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse_trace(in, line_bits);
}

std::string trace_digest_of(const std::vector<MemoryRequest>& trace) {
  return fnv1a_hex(serialize_trace(trace));
}

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::string manifest_path;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_config = true) {
  if (with_config) cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--out", opts.out_path, "output report path")->required();
  cmd->add_option("--manifest", opts.manifest_path, "write a run manifest here");
  cmd->add_option("--format", opts.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", opts.seed, "override the config seed");
}

void finish_run(const CommonOpts& opts, StatsReport& report, const std::string& engine,
                const std::vector<std::string>& inputs,
                std::chrono::steady_clock::time_point started) {
  const auto text = emit_report(
      report, opts.format == "csv" ? ReportFormat::Csv : ReportFormat::Json);
  write_file(opts.out_path, text);
  if (!opts.manifest_path.empty()) {
    RunManifest manifest;
    manifest.engine = engine;
    manifest.inputs = inputs;
    manifest.config_digest = config_digest(report.config);
    manifest.version = PCMKIT_VERSION;
    manifest.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_file(opts.manifest_path, to_json(manifest).dump(2) + "\n");
  }
  log_info(engine + ": wrote " + opts.out_path);
}

int run_gen_trace(const std::string& spec_path, const json& overrides,
                  const std::string& out_path) {
  json spec_json = json::object();
  if (!spec_path.empty()) spec_json = load_config_file(spec_path);
  for (const auto& [k, v] : overrides.items()) spec_json[k] = v;
  const TraceSpec spec = load_trace_spec(spec_json);
  const auto trace = generate_trace(spec);
  write_file(out_path, serialize_trace(trace));
  log_info("gen-trace: " + std::to_string(trace.size()) + " records -> " + out_path);
  return 0;
}

int run_simulate_pcm(const CommonOpts& opts, const std::string& trace_path,
                     const std::string& policy) {
  const auto started = std::chrono::steady_clock::now();
  json config = load_config_file(opts.config_path);
  if (!policy.empty()) config["datacon"]["policy"] = policy;
  if (opts.seed) config["seed"] = *opts.seed;
  const PcmSimConfig cfg = load_pcm_sim_config(config);
  const auto trace = load_trace(trace_path, cfg.line_bits());
  auto report = simulate_pcm(trace, cfg);
  report.trace_digest = trace_digest_of(trace);
  report.config = config;
  finish_run(opts, report, "pcm", {trace_path, opts.config_path}, started);
  return report.failed ? static_cast<int>(ErrCategory::Infeasible) : 0;
}

int run_simulate_hybrid(const CommonOpts& opts, const std::string& trace_path,
                        const std::string& policy) {
  const auto started = std::chrono::steady_clock::now();
  json config = load_config_file(opts.config_path);
  if (!policy.empty()) config["mneme"]["policy"] = policy;
  if (opts.seed) config["seed"] = *opts.seed;
  const HybridSimConfig cfg = load_hybrid_sim_config(config);
  const auto trace = load_trace(trace_path, cfg.line_bits());
  auto report = simulate_hybrid(trace, cfg);
  report.trace_digest = trace_digest_of(trace);
  report.config = config;
  finish_run(opts, report, "hybrid", {trace_path, opts.config_path}, started);
  return report.failed ? static_cast<int>(ErrCategory::Infeasible) : 0;
}

int run_map_snn(const std::string& snn_path, std::uint32_t n_tiles, const TileCaps& caps,
                const std::string& objective, const std::string& pso_json,
                const AgingCoefficients& coeffs, std::optional<std::uint64_t> seed,
                ClusterStrategy strategy, const std::string& out_path) {
  if (!(coeffs.c_nbti > 0.0) && !(coeffs.c_tddb > 0.0) && !(coeffs.c_hci > 0.0))
    throw Error(Errc::ConfigInvalid, "coefficients: at least one aging rate must be positive");
  std::ifstream in(snn_path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + snn_path);
  const SnnGraph graph = parse_snn(in);

  PsoParams params;
  if (!pso_json.empty())
    params = load_pso_params(parse_config_json(pso_json, "--pso"));
  if (seed) params.seed = *seed;

  const auto clusters =
      partition_into_clusters(graph, caps.neuron_cap, caps.synapse_cap, strategy);
  PsoResult result;
  if (objective == "traffic") {
    // Penalty scale: every synapse crossing a tile boundary, the proxy's
    // upper bound.
    std::uint64_t bound = 0;
    {
      std::unordered_map<std::uint64_t, std::uint64_t> spikes_of;
      for (const auto& n : graph.neurons) spikes_of[n.id] = n.spikes;
      for (const auto& syn : graph.synapses) bound += spikes_of.at(syn.pre);
    }
    const double total_traffic = static_cast<double>(bound);
    const double penalty_rate = total_traffic > 0.0 ? 1e6 * total_traffic : 1.0;
    result = pso_optimize(clusters, n_tiles, caps, params, [&](const Mapping& m) {
      double value = static_cast<double>(performance_proxy(m, graph, clusters));
      std::uint64_t excess = 0;
      for (const auto& load : detail::tile_loads(m, clusters, n_tiles)) {
        if (load.neurons > caps.neuron_cap) excess += load.neurons - caps.neuron_cap;
        if (load.synapses > caps.synapse_cap) excess += load.synapses - caps.synapse_cap;
      }
      return value + penalty_rate * static_cast<double>(excess);
    });
  } else {
    result = pso_optimize(clusters, n_tiles, caps, coeffs, params);
  }

  nlohmann::ordered_json out;
  out["engine"] = "snn-map";
  out["n_tiles"] = n_tiles;
  out["neuron_cap"] = caps.neuron_cap;
  out["synapse_cap"] = caps.synapse_cap;
  out["objective"] = objective;
  out["coefficients"] = {{"c_nbti", coeffs.c_nbti},
                         {"c_tddb", coeffs.c_tddb},
                         {"c_hci", coeffs.c_hci}};
  out["n_clusters"] = result.mapping.tile_of.size();
  out["clusters"] = nlohmann::ordered_json::array();
  for (const auto& c : clusters) {
    nlohmann::ordered_json jc;
    jc["id"] = c.id;
    jc["neurons"] = c.neuron_ids;
    jc["internal_synapses"] = c.internal_synapses;
    jc["incident_synapses"] = c.incident_synapses;
    jc["total_spikes"] = c.total_spikes;
    out["clusters"].push_back(jc);
  }
  out["mapping"] = result.mapping.tile_of;
  const auto tile_rates = per_tile_aging(result.mapping, clusters, n_tiles, coeffs);
  out["per_tile_aging"] = tile_rates;
  out["max_aging"] = *std::max_element(tile_rates.begin(), tile_rates.end());
  out["traffic_proxy"] = performance_proxy(result.mapping, graph, clusters);
  out["fitness"] = result.fitness;
  out["fitness_trace"] = result.fitness_trace;
  out["seed"] = params.seed;
  write_file(out_path, out.dump(2) + "\n");
  log_info("map-snn: wrote " + out_path);
  return 0;
}

int run_compare(const std::string& a_path, const std::string& b_path,
                const std::string& out_path) {
  const auto a = report_from_json(parse_config_json(read_file(a_path), a_path));
  const auto b = report_from_json(parse_config_json(read_file(b_path), b_path));
  const auto delta = compare_runs(a, b);
  const std::string text = to_json(delta).dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  return 0;
}

int run_sweep(const std::string& engine, const std::string& trace_path,
              const std::string& config_path, const std::string& policy,
              const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::ordered_json summary;
  summary["engine"] = engine;
  summary["runs"] = nlohmann::ordered_json::array();
  for (const auto seed : seeds) {
    CommonOpts opts;
    opts.config_path = config_path;
    opts.seed = seed;
    opts.out_path = out_dir + "/report_seed" + std::to_string(seed) + ".json";
    int rc;
    if (engine == "pcm")
      rc = run_simulate_pcm(opts, trace_path, policy);
    else
      rc = run_simulate_hybrid(opts, trace_path, policy);
    if (rc != 0) return rc;
    const auto report = report_from_json(parse_config_json(read_file(opts.out_path),
                                                           opts.out_path));
    nlohmann::ordered_json row;
    row["seed"] = seed;
    row["report"] = "report_seed" + std::to_string(seed) + ".json";
    row["effective_access_latency"] = report.effective_access_latency();
    row["total_energy"] = report.total_energy();
    row["aging_max"] = report.aging_max();
    row["migrations"] = report.migrations;
    summary["runs"].push_back(row);
  }
  write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
  log_info("sweep: " + std::to_string(seeds.size()) + " runs -> " + out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcmkit: trace-driven PCM memory system simulator and mapper"};
  app.require_subcommand(1);

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "synthesize a memory trace");
  std::string gen_spec_path, gen_out;
  json gen_overrides = json::object();
  std::optional<std::uint64_t> gv_n, gv_seed, gv_addrs, gv_line_bytes, gv_addr_stride,
      gv_cycle_stride;
  std::optional<double> gv_read_ratio, gv_density, gv_zipf_s, gv_hot_fraction, gv_hot_share;
  std::string gv_model;
  bool gv_allocs = false;
  gen->add_option("--spec", gen_spec_path, "trace spec JSON file");
  gen->add_option("--n", gv_n, "number of requests");
  gen->add_option("--read-ratio", gv_read_ratio, "fraction of reads");
  gen->add_option("--density", gv_density, "SET-bit density of write payloads");
  gen->add_option("--addr-model", gv_model, "uniform|zipf|hotcold")
      ->check(CLI::IsMember({"uniform", "zipf", "hotcold"}));
  gen->add_option("--zipf-s", gv_zipf_s, "Zipf exponent");
  gen->add_option("--hot-fraction", gv_hot_fraction, "fraction of hot addresses");
  gen->add_option("--hot-share", gv_hot_share, "share of accesses to hot addresses");
  gen->add_option("--n-addresses", gv_addrs, "distinct addresses");
  gen->add_option("--line-bytes", gv_line_bytes, "payload width in bytes");
  gen->add_option("--address-stride", gv_addr_stride, "spacing between addresses in bytes");
  gen->add_option("--cycle-stride", gv_cycle_stride, "cycles between requests");
  gen->add_flag("--allocs", gv_allocs, "emit Alloc records at first page touch");
  gen->add_option("--seed", gv_seed, "generator seed");
  gen->add_option("--out", gen_out, "output trace path")->required();

  // simulate-pcm
  auto* simpcm = app.add_subcommand("simulate-pcm", "run the PCM write-path simulator");
  CommonOpts pcm_opts;
  std::string pcm_trace, pcm_policy;
  simpcm->add_option("--trace", pcm_trace, "trace file")->required();
  simpcm->add_option("--policy", pcm_policy, "datacon|preset|inplace")
      ->check(CLI::IsMember({"datacon", "preset", "inplace"}));
  add_common(simpcm, pcm_opts);

  // simulate-hybrid
  auto* simhy = app.add_subcommand("simulate-hybrid", "run the hybrid DRAM-PCM simulator");
  CommonOpts hy_opts;
  std::string hy_trace, hy_policy;
  simhy->add_option("--trace", hy_trace, "trace file")->required();
  simhy->add_option("--policy", hy_policy, "mneme|nimble")
      ->check(CLI::IsMember({"mneme", "nimble"}));
  add_common(simhy, hy_opts);

  // map-snn
  auto* mapsnn = app.add_subcommand("map-snn", "map an SNN onto tiles");
  std::string snn_path, snn_objective = "aging", snn_pso, snn_out;
  std::uint32_t snn_tiles = 0;
  TileCaps snn_caps;
  AgingCoefficients snn_coeffs;
  std::optional<std::uint64_t> snn_seed;
  mapsnn->add_option("--snn", snn_path, "SNN JSON file")->required();
  mapsnn->add_option("--tiles", snn_tiles, "number of tiles")->required();
  mapsnn->add_option("--neuron-cap", snn_caps.neuron_cap, "neurons per tile")->required();
  mapsnn->add_option("--synapse-cap", snn_caps.synapse_cap, "synapses per tile")->required();
  mapsnn->add_option("--objective", snn_objective, "aging|traffic")
      ->check(CLI::IsMember({"aging", "traffic"}));
  mapsnn->add_option("--pso", snn_pso, "PSO params as inline JSON");
  std::string snn_cluster = "bfs";
  mapsnn->add_option("--cluster-strategy", snn_cluster, "bfs|mincut")
      ->check(CLI::IsMember({"bfs", "mincut"}));
  mapsnn->add_option("--c-nbti", snn_coeffs.c_nbti, "NBTI rate per spike");
  mapsnn->add_option("--c-tddb", snn_coeffs.c_tddb, "TDDB rate per spike");
  mapsnn->add_option("--c-hci", snn_coeffs.c_hci, "HCI rate per spike");
  mapsnn->add_option("--seed", snn_seed, "override PSO seed");
  mapsnn->add_option("--out", snn_out, "output path")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "percentage deltas between two reports");
  std::string cmp_a, cmp_b, cmp_out;
  std::optional<std::uint64_t> cmp_seed;
  cmp->add_option("--a", cmp_a, "report A")->required();
  cmp->add_option("--b", cmp_b, "report B (baseline)")->required();
  cmp->add_option("--out", cmp_out, "output path (stdout when omitted)");
  cmp->add_option("--seed", cmp_seed, "accepted for sweep scripting; comparison is seedless");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run one engine across several seeds");
  std::string sw_engine, sw_trace, sw_config, sw_policy, sw_out_dir;
  std::vector<std::uint64_t> sw_seeds;
  std::optional<std::uint64_t> sw_seed;
  sweep->add_option("--engine", sw_engine, "pcm|hybrid")
      ->check(CLI::IsMember({"pcm", "hybrid"}))
      ->required();
  sweep->add_option("--trace", sw_trace, "trace file")->required();
  sweep->add_option("--config", sw_config, "JSON config file");
  sweep->add_option("--policy", sw_policy, "engine policy");
  sweep->add_option("--seeds", sw_seeds, "seed list")->delimiter(',');
  sweep->add_option("--seed", sw_seed, "single seed (alternative to --seeds)");
  sweep->add_option("--out-dir", sw_out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(pcmkit::ErrCategory::Config);
  }

  try {
    if (gen->parsed()) {
      if (gv_n) gen_overrides["n_requests"] = *gv_n;
      if (gv_read_ratio) gen_overrides["read_ratio"] = *gv_read_ratio;
      if (gv_density) gen_overrides["set_bit_density"] = *gv_density;
      if (gv_seed) gen_overrides["seed"] = *gv_seed;
      if (gv_addrs) gen_overrides["n_addresses"] = *gv_addrs;
      if (gv_line_bytes) gen_overrides["line_bytes"] = *gv_line_bytes;
      if (gv_addr_stride) gen_overrides["address_stride"] = *gv_addr_stride;
      if (gv_cycle_stride) gen_overrides["cycle_stride"] = *gv_cycle_stride;
      if (gv_allocs) gen_overrides["emit_allocs"] = true;
      if (!gv_model.empty()) {
        gen_overrides["address_model"]["kind"] = gv_model;
        if (gv_zipf_s) gen_overrides["address_model"]["s"] = *gv_zipf_s;
        if (gv_hot_fraction) gen_overrides["address_model"]["hot_fraction"] = *gv_hot_fraction;
        if (gv_hot_share) gen_overrides["address_model"]["hot_access_share"] = *gv_hot_share;
      }
      return run_gen_trace(gen_spec_path, gen_overrides, gen_out);
    }
    if (simpcm->parsed()) return run_simulate_pcm(pcm_opts, pcm_trace, pcm_policy);
    if (simhy->parsed()) return run_simulate_hybrid(hy_opts, hy_trace, hy_policy);
    if (mapsnn->parsed())
      return run_map_snn(snn_path, snn_tiles, snn_caps, snn_objective, snn_pso, snn_coeffs,
                         snn_seed,
                         snn_cluster == "mincut" ? ClusterStrategy::MinCut
                                                 : ClusterStrategy::Bfs,
                         snn_out);
    if (cmp->parsed()) return run_compare(cmp_a, cmp_b, cmp_out);
    if (sweep->parsed()) {
      if (sw_seed) sw_seeds.push_back(*sw_seed);
      if (sw_seeds.empty())
        throw Error(Errc::ConfigInvalid, "sweep: give --seeds or --seed");
      return run_sweep(sw_engine, sw_trace, sw_config, sw_policy, sw_seeds, sw_out_dir);
    }
  } catch (const pcmkit::Error& e) {
    std::cerr << "pcmkit: error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "pcmkit: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
