#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "pcmkit/datacon.hpp"
#include "pcmkit/errors.hpp"
#include "pcmkit/mneme.hpp"
#include "pcmkit/reneu.hpp"
#include "pcmkit/trace.hpp"

namespace pcmkit {

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& why) {
  throw Error(Errc::ConfigInvalid, path + ": " + why);
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& path, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto full = path.empty() ? key : path + "." + key;
  // Negative integers would wrap silently into unsigned fields.
  if constexpr (std::is_unsigned_v<T>)
    if (j.at(key).is_number_integer() && !j.at(key).is_number_unsigned() &&
        j.at(key).get<std::int64_t>() < 0)
      config_fail(full, "must be nonnegative");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_fail(full, "wrong type");
  }
}

inline const nlohmann::json& section(const nlohmann::json& j, const std::string& key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) config_fail(key, "must be an object");
  return j.at(key);
}

}  // namespace detail

inline PcmParams load_pcm_params(const nlohmann::json& root) {
  const auto& j = detail::section(root, "pcm");
  PcmParams p;
  p.t_set = detail::get_or<std::uint64_t>(j, "pcm", "t_set", p.t_set);
  p.t_reset = detail::get_or<std::uint64_t>(j, "pcm", "t_reset", p.t_reset);
  p.t_read = detail::get_or<std::uint64_t>(j, "pcm", "t_read", p.t_read);
  p.e_set_bit = detail::get_or<double>(j, "pcm", "e_set_bit", p.e_set_bit);
  p.e_reset_bit = detail::get_or<double>(j, "pcm", "e_reset_bit", p.e_reset_bit);
  p.e_read_bit = detail::get_or<double>(j, "pcm", "e_read_bit", p.e_read_bit);
  p.overlap_phases = detail::get_or<bool>(j, "pcm", "overlap_phases", p.overlap_phases);
  if (p.t_set <= p.t_reset) detail::config_fail("pcm.t_set", "must be greater than pcm.t_reset");
  if (!(p.e_reset_bit > p.e_set_bit))
    detail::config_fail("pcm.e_reset_bit", "must be greater than pcm.e_set_bit");
  if (p.e_set_bit < 0.0) detail::config_fail("pcm.e_set_bit", "must be nonnegative");
  if (p.e_read_bit < 0.0) detail::config_fail("pcm.e_read_bit", "must be nonnegative");
  return p;
}

inline AgingParams load_aging_params(const nlohmann::json& root) {
  const auto& j = detail::section(root, "aging");
  AgingParams a;
  a.k = detail::get_or<double>(j, "aging", "k", a.k);
  a.gamma = detail::get_or<double>(j, "aging", "gamma", a.gamma);
  a.failure_threshold =
      detail::get_or<double>(j, "aging", "failure_threshold", a.failure_threshold);
  a.v_op = detail::get_or<double>(j, "aging", "v_op", a.v_op);
  if (a.k < 0.0) detail::config_fail("aging.k", "must be nonnegative");
  if (!(a.failure_threshold > 0.0))
    detail::config_fail("aging.failure_threshold", "must be positive");
  if (!(a.v_op > 0.0)) detail::config_fail("aging.v_op", "must be positive");
  return a;
}

inline SegmentParams load_segment_params(const nlohmann::json& root) {
  const auto& j = detail::section(root, "segment");
  SegmentParams s;
  s.near_frames = detail::get_or<std::uint64_t>(j, "segment", "near_frames", s.near_frames);
  s.far_frames = detail::get_or<std::uint64_t>(j, "segment", "far_frames", s.far_frames);
  s.extra_far_latency =
      detail::get_or<std::uint64_t>(j, "segment", "extra_far_latency", s.extra_far_latency);
  s.v_near = detail::get_or<double>(j, "segment", "v_near", s.v_near);
  s.v_far = detail::get_or<double>(j, "segment", "v_far", s.v_far);
  if (s.near_frames < 1) detail::config_fail("segment.near_frames", "must be >= 1");
  if (s.far_frames < 1) detail::config_fail("segment.far_frames", "must be >= 1");
  if (s.extra_far_latency < 1) detail::config_fail("segment.extra_far_latency", "must be >= 1");
  if (!(s.v_near > 0.0)) detail::config_fail("segment.v_near", "must be positive");
  if (!(s.v_far > s.v_near))
    detail::config_fail("segment.v_far", "must be greater than segment.v_near");
  return s;
}

inline DramParams load_dram_params(const nlohmann::json& root) {
  const auto& j = detail::section(root, "dram");
  DramParams d;
  d.t_access_near = detail::get_or<std::uint64_t>(j, "dram", "t_access_near", d.t_access_near);
  d.t_access_far = detail::get_or<std::uint64_t>(j, "dram", "t_access_far", d.t_access_far);
  d.e_access_bit = detail::get_or<double>(j, "dram", "e_access_bit", d.e_access_bit);
  if (d.t_access_far <= d.t_access_near)
    detail::config_fail("dram.t_access_far", "must be greater than dram.t_access_near");
  if (d.e_access_bit < 0.0) detail::config_fail("dram.e_access_bit", "must be nonnegative");
  return d;
}

inline PcmSimConfig load_pcm_sim_config(const nlohmann::json& root) {
  PcmSimConfig cfg;
  cfg.line_bytes = detail::get_or<std::uint64_t>(root, "", "line_bytes", cfg.line_bytes);
  if (cfg.line_bytes < 1) detail::config_fail("line_bytes", "must be >= 1");
  cfg.pcm = load_pcm_params(root);
  cfg.aging = load_aging_params(root);
  cfg.seed = detail::get_or<std::uint64_t>(root, "", "seed", cfg.seed);

  const auto& j = detail::section(root, "datacon");
  auto& dc = cfg.datacon;
  dc.n_lines = detail::get_or<std::uint64_t>(j, "datacon", "n_lines", dc.n_lines);
  dc.n_partitions = detail::get_or<std::uint64_t>(j, "datacon", "n_partitions", dc.n_partitions);
  dc.spare_fraction = detail::get_or<double>(j, "datacon", "spare_fraction", dc.spare_fraction);
  dc.threshold = detail::get_or<double>(j, "datacon", "threshold", dc.threshold);
  if (j.contains("policy")) {
    const auto name = j.at("policy").get<std::string>();
    if (name == "datacon")
      dc.policy = PcmPolicy::Datacon;
    else if (name == "preset")
      dc.policy = PcmPolicy::PreSet;
    else if (name == "inplace")
      dc.policy = PcmPolicy::InPlace;
    else
      detail::config_fail("datacon.policy", "must be datacon|preset|inplace");
  }
  if (dc.n_lines < 1) detail::config_fail("datacon.n_lines", "must be >= 1");
  if (dc.n_partitions < 1) detail::config_fail("datacon.n_partitions", "must be >= 1");
  if (dc.n_lines % dc.n_partitions != 0)
    detail::config_fail("datacon.n_partitions", "must divide datacon.n_lines");
  if (!(dc.threshold > 0.0) || !(dc.threshold < 1.0))
    detail::config_fail("datacon.threshold", "must be in (0,1)");
  if (dc.spare_fraction * static_cast<double>(dc.n_lines) < 2.0)
    detail::config_fail("datacon.spare_fraction",
                        "spare_fraction * n_lines must be at least 2");
  if (dc.spare_lines() >= dc.n_lines)
    detail::config_fail("datacon.spare_fraction", "leaves no logical lines");
  return cfg;
}

inline HybridSimConfig load_hybrid_sim_config(const nlohmann::json& root) {
  HybridSimConfig cfg;
  cfg.line_bytes = detail::get_or<std::uint64_t>(root, "", "line_bytes", cfg.line_bytes);
  if (cfg.line_bytes < 1 || kPageBytes % cfg.line_bytes != 0)
    detail::config_fail("line_bytes", "must divide the 4096-byte page size");
  cfg.pcm = load_pcm_params(root);
  cfg.dram = load_dram_params(root);
  cfg.segment = load_segment_params(root);
  cfg.aging = load_aging_params(root);
  cfg.seed = detail::get_or<std::uint64_t>(root, "", "seed", cfg.seed);

  const auto& j = detail::section(root, "mneme");
  auto& mn = cfg.mneme;
  // Tier capacities default to the segment split, applied to each device;
  // mneme.frames overrides per tier.
  mn.frames = {cfg.segment.near_frames, cfg.segment.far_frames, cfg.segment.near_frames,
               cfg.segment.far_frames};
  if (j.contains("frames")) {
    const auto& f = j.at("frames");
    if (!f.is_object()) detail::config_fail("mneme.frames", "must be an object");
    for (int t = 0; t < kNumTiers; ++t) {
      std::string key = tier_name(t);
      std::replace(key.begin(), key.end(), '.', '_');
      mn.frames[static_cast<std::size_t>(t)] = detail::get_or<std::uint64_t>(
          f, "mneme.frames", key, mn.frames[static_cast<std::size_t>(t)]);
    }
  }
  for (int t = 0; t < kNumTiers; ++t)
    if (mn.frames[static_cast<std::size_t>(t)] < 1)
      detail::config_fail(std::string("mneme.frames.") + tier_name(t), "must be >= 1");
  mn.epoch_length = detail::get_or<std::uint64_t>(j, "mneme", "epoch_length", mn.epoch_length);
  mn.migration_budget =
      detail::get_or<std::uint64_t>(j, "mneme", "migration_budget", mn.migration_budget);
  mn.writes_hot = detail::get_or<std::uint64_t>(j, "mneme", "writes_hot", mn.writes_hot);
  mn.reads_hot = detail::get_or<std::uint64_t>(j, "mneme", "reads_hot", mn.reads_hot);
  mn.predictor_decay =
      detail::get_or<double>(j, "mneme", "predictor_decay", mn.predictor_decay);
  mn.clairvoyant = detail::get_or<bool>(j, "mneme", "clairvoyant", mn.clairvoyant);
  if (j.contains("policy")) {
    const auto name = j.at("policy").get<std::string>();
    if (name == "mneme")
      mn.policy = HybridPolicy::Mneme;
    else if (name == "nimble")
      mn.policy = HybridPolicy::Nimble;
    else
      detail::config_fail("mneme.policy", "must be mneme|nimble");
  }
  if (j.contains("default_class")) {
    const auto name = j.at("default_class").get<std::string>();
    if (name == "write_intensive")
      mn.default_class = IntensityClass::WriteIntensive;
    else if (name == "read_intensive")
      mn.default_class = IntensityClass::ReadIntensive;
    else if (name == "cold")
      mn.default_class = IntensityClass::Cold;
    else
      detail::config_fail("mneme.default_class", "must be write_intensive|read_intensive|cold");
  }
  if (j.contains("pin_tier") && !j.at("pin_tier").is_null()) {
    const auto name = j.at("pin_tier").get<std::string>();
    const auto tier = tier_index_from_name(name);
    if (!tier) detail::config_fail("mneme.pin_tier", "unknown tier '" + name + "'");
    mn.pin_tier = *tier;
  }
  if (mn.epoch_length < 1) detail::config_fail("mneme.epoch_length", "must be >= 1");
  if (mn.writes_hot < 1) detail::config_fail("mneme.writes_hot", "must be >= 1");
  if (mn.reads_hot < 1) detail::config_fail("mneme.reads_hot", "must be >= 1");
  if (!(mn.predictor_decay > 0.0) || mn.predictor_decay > 1.0)
    detail::config_fail("mneme.predictor_decay", "must be in (0,1]");
  return cfg;
}

inline TraceSpec load_trace_spec(const nlohmann::json& j) {
  TraceSpec spec;
  spec.n_requests = detail::get_or<std::uint64_t>(j, "", "n_requests", spec.n_requests);
  spec.read_ratio = detail::get_or<double>(j, "", "read_ratio", spec.read_ratio);
  spec.set_bit_density =
      detail::get_or<double>(j, "", "set_bit_density", spec.set_bit_density);
  spec.seed = detail::get_or<std::uint64_t>(j, "", "seed", spec.seed);
  spec.n_addresses = detail::get_or<std::uint64_t>(j, "", "n_addresses", spec.n_addresses);
  spec.line_bytes = detail::get_or<std::uint64_t>(j, "", "line_bytes", spec.line_bytes);
  spec.address_stride =
      detail::get_or<std::uint64_t>(j, "", "address_stride", spec.address_stride);
  spec.cycle_stride = detail::get_or<std::uint64_t>(j, "", "cycle_stride", spec.cycle_stride);
  spec.emit_allocs = detail::get_or<bool>(j, "", "emit_allocs", spec.emit_allocs);
  if (j.contains("address_model")) {
    const auto& m = j.at("address_model");
    if (!m.is_object() || !m.contains("kind"))
      detail::config_fail("address_model", "must be an object with a kind");
    const auto kind = m.at("kind").get<std::string>();
    if (kind == "uniform") {
      spec.address_model.kind = AddressModelKind::Uniform;
    } else if (kind == "zipf") {
      spec.address_model.kind = AddressModelKind::Zipf;
      spec.address_model.zipf_s =
          detail::get_or<double>(m, "address_model", "s", spec.address_model.zipf_s);
    } else if (kind == "hotcold") {
      spec.address_model.kind = AddressModelKind::HotCold;
      spec.address_model.hot_fraction = detail::get_or<double>(
          m, "address_model", "hot_fraction", spec.address_model.hot_fraction);
      spec.address_model.hot_access_share = detail::get_or<double>(
          m, "address_model", "hot_access_share", spec.address_model.hot_access_share);
    } else {
      detail::config_fail("address_model.kind", "must be uniform|zipf|hotcold");
    }
  }
  validate(spec);
  return spec;
}

inline PsoParams load_pso_params(const nlohmann::json& j) {
  PsoParams p;
  p.swarm_size = detail::get_or<std::uint64_t>(j, "pso", "swarm_size", p.swarm_size);
  p.iterations = detail::get_or<std::uint64_t>(j, "pso", "iterations", p.iterations);
  p.inertia = detail::get_or<double>(j, "pso", "w", p.inertia);
  p.cognitive = detail::get_or<double>(j, "pso", "c1", p.cognitive);
  p.social = detail::get_or<double>(j, "pso", "c2", p.social);
  p.restarts = detail::get_or<std::uint64_t>(j, "pso", "restarts", p.restarts);
  p.seed = detail::get_or<std::uint64_t>(j, "pso", "seed", p.seed);
  validate(p);
  return p;
}

}  // namespace pcmkit
