#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcmkit/errors.hpp"

namespace pcmkit {

/// FNV-1a over a byte string; stable across hosts, used for trace and
/// config digests.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Digest of a config object independent of key order or formatting.
inline std::string config_digest(const nlohmann::json& config) {
  return fnv1a_hex(nlohmann::json(config).dump());
}

/// Aggregated totals for one simulation run. Latencies are exact integer
/// cycles; effective_access_latency is derived at emission time.
struct StatsReport {
  std::string engine;
  std::uint64_t requests = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t total_latency = 0;
  double demand_energy = 0.0;
  double background_energy = 0.0;
  std::uint64_t redirections = 0;
  std::uint64_t pool_misses = 0;
  std::uint64_t migrations = 0;
  std::map<std::string, std::uint64_t> tier_hist;
  std::map<std::string, double> aging;
  bool failed = false;
  std::uint64_t seed = 0;
  std::string trace_digest;
  nlohmann::json config;

  double effective_access_latency() const {
    return requests == 0 ? 0.0
                         : static_cast<double>(total_latency) / static_cast<double>(requests);
  }
  double total_energy() const { return demand_energy + background_energy; }
  double aging_max() const {
    double m = 0.0;
    for (const auto& [_, v] : aging) m = std::max(m, v);
    return m;
  }
};

inline nlohmann::ordered_json to_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  j["engine"] = r.engine;
  j["requests"] = r.requests;
  j["reads"] = r.reads;
  j["writes"] = r.writes;
  j["total_latency"] = r.total_latency;
  j["effective_access_latency"] = r.effective_access_latency();
  j["demand_energy"] = r.demand_energy;
  j["background_energy"] = r.background_energy;
  j["total_energy"] = r.total_energy();
  j["redirections"] = r.redirections;
  j["pool_misses"] = r.pool_misses;
  j["migrations"] = r.migrations;
  j["tier_hist"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.tier_hist) j["tier_hist"][k] = v;
  j["aging"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.aging) j["aging"][k] = v;
  j["aging_max"] = r.aging_max();
  j["failed"] = r.failed;
  j["seed"] = r.seed;
  j["trace_digest"] = r.trace_digest;
  j["config_digest"] = config_digest(r.config);
  j["config"] = r.config;
  return j;
}

inline StatsReport report_from_json(const nlohmann::json& j) {
  StatsReport r;
  try {
    r.engine = j.at("engine").get<std::string>();
    r.requests = j.at("requests").get<std::uint64_t>();
    r.reads = j.at("reads").get<std::uint64_t>();
    r.writes = j.at("writes").get<std::uint64_t>();
    r.total_latency = j.at("total_latency").get<std::uint64_t>();
    r.demand_energy = j.at("demand_energy").get<double>();
    r.background_energy = j.at("background_energy").get<double>();
    r.redirections = j.at("redirections").get<std::uint64_t>();
    r.pool_misses = j.at("pool_misses").get<std::uint64_t>();
    r.migrations = j.at("migrations").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("tier_hist").items())
      r.tier_hist[k] = v.get<std::uint64_t>();
    for (const auto& [k, v] : j.at("aging").items()) r.aging[k] = v.get<double>();
    r.failed = j.at("failed").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.trace_digest = j.at("trace_digest").get<std::string>();
    r.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, std::string("report: missing or malformed field: ") + e.what());
  }
  return r;
}

enum class ReportFormat { Json, Csv };

namespace detail {

inline void flatten_json(const nlohmann::ordered_json& j, const std::string& prefix,
                         std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      flatten_json(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

}  // namespace detail

/// JSON is the canonical form; CSV flattens nested objects with dotted
/// keys into a header row and a single value row.
inline std::string emit_report(const StatsReport& r, ReportFormat format) {
  const auto j = to_json(r);
  if (format == ReportFormat::Json) return j.dump(2) + "\n";
  std::vector<std::pair<std::string, std::string>> cells;
  detail::flatten_json(j, "", cells);
  std::string header, row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) {
      header += ',';
      row += ',';
    }
    header += cells[i].first;
    std::string value = cells[i].second;
    if (value.find(',') != std::string::npos) value = "\"" + value + "\"";
    row += value;
  }
  return header + "\n" + row + "\n";
}

/// Percentage deltas of a against b; negative means a improved on b.
struct DeltaReport {
  double latency_pct = 0.0;
  double energy_pct = 0.0;
  double aging_pct = 0.0;
  double migrations_pct = 0.0;
};

inline DeltaReport compare_runs(const StatsReport& a, const StatsReport& b) {
  if (a.trace_digest != b.trace_digest)
    throw Error(Errc::MismatchedTrace, "compare: reports come from different traces (" +
                                           a.trace_digest + " vs " + b.trace_digest + ")");
  auto pct = [](double x, double y) {
    if (y == 0.0) return 0.0;  // both zero compares equal; nothing to rank otherwise
    return (x - y) / y * 100.0;
  };
  DeltaReport d;
  d.latency_pct = pct(a.effective_access_latency(), b.effective_access_latency());
  d.energy_pct = pct(a.total_energy(), b.total_energy());
  d.aging_pct = pct(a.aging_max(), b.aging_max());
  d.migrations_pct =
      pct(static_cast<double>(a.migrations), static_cast<double>(b.migrations));
  return d;
}

inline nlohmann::ordered_json to_json(const DeltaReport& d) {
  nlohmann::ordered_json j;
  j["latency_pct"] = d.latency_pct;
  j["energy_pct"] = d.energy_pct;
  j["aging_pct"] = d.aging_pct;
  j["migrations_pct"] = d.migrations_pct;
  return j;
}

/// Provenance sidecar for a run; not part of the report so reruns stay
/// byte-identical.
struct RunManifest {
  std::string engine;
  std::vector<std::string> inputs;
  std::string config_digest;
  std::string version;
  double runtime_seconds = 0.0;
};

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["engine"] = m.engine;
  j["inputs"] = m.inputs;
  j["config_digest"] = m.config_digest;
  j["version"] = m.version;
  j["runtime_seconds"] = m.runtime_seconds;
  return j;
}

}  // namespace pcmkit
