#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pcmkit/bitvec.hpp"
#include "pcmkit/device.hpp"
#include "pcmkit/errors.hpp"
#include "pcmkit/report.hpp"
#include "pcmkit/trace.hpp"

namespace pcmkit {

enum class PcmPolicy { Datacon, PreSet, InPlace };

enum class Precursor { AllZeros, AllOnes };

inline std::uint64_t count_set_bits(const BitVec& payload) { return payload.popcount(); }

/// AllZeros for a SET fraction strictly below the threshold, AllOnes at or
/// above it. The comparison is strict: a payload at exactly the threshold
/// selects the all-ones precursor.
inline Precursor choose_precursor(double set_fraction, double threshold) {
  return set_fraction < threshold ? Precursor::AllZeros : Precursor::AllOnes;
}

struct DataconConfig {
  std::uint64_t n_lines = 4096;
  std::uint64_t n_partitions = 8;
  double spare_fraction = 0.02;
  double threshold = 0.60;
  PcmPolicy policy = PcmPolicy::Datacon;

  std::uint64_t spare_lines() const {
    const auto spares = static_cast<std::uint64_t>(
        std::llround(spare_fraction * static_cast<double>(n_lines)));
    return spares;
  }
  /// Logical address space; the remainder circulates through the pools.
  std::uint64_t logical_lines() const { return n_lines - spare_lines(); }
};

struct PcmSimConfig {
  std::uint64_t line_bytes = 64;
  PcmParams pcm;
  AgingParams aging;
  DataconConfig datacon;
  std::uint64_t seed = 0;

  std::uint64_t line_bits() const { return line_bytes * 8; }
};

struct WriteOutcome {
  std::uint64_t latency = 0;  // stall + service
  std::uint64_t stall = 0;
  double demand_energy = 0.0;
  bool redirected = false;
  bool pool_miss = false;
};

struct ReadOutcome {
  std::uint64_t latency = 0;
  std::uint64_t stall = 0;
  double energy = 0.0;
  BitVec data;
};

/// Per-access record handed to a simulate() observer (test hook).
struct AccessOutcome {
  RequestKind kind = RequestKind::Read;
  std::uint64_t latency = 0;
  std::uint64_t stall = 0;
  double demand_energy = 0.0;
  bool redirected = false;
  bool pool_miss = false;
  BitVec read_data;  // reads only
};

// Trace-driven PCM bank model. Physical lines are striped over partitions
// (partition = line mod n_partitions); each partition serves one demand
// access or one re-initialization pulse at a time. Under the Datacon
// policy writes are redirected onto pooled all-zeros/all-ones precursor
// lines and released lines are re-initialized in the background; PreSet
// and InPlace keep an identity mapping and differ only in how a demand
// write is charged.
class PcmEngine {
 public:
  explicit PcmEngine(const PcmSimConfig& cfg) : cfg_(cfg) {
    const auto& dc = cfg_.datacon;
    content_.assign(dc.n_lines, BitVec::zeros(cfg_.line_bits()));
    l2p_.assign(dc.logical_lines(), kNone);
    p2l_.assign(dc.n_lines, kNone);
    state_.assign(dc.n_lines, LineState::PoolZeros);
    partitions_.resize(dc.n_partitions);
    for (auto& part : partitions_) part.aging.failure_threshold = cfg_.aging.failure_threshold;
    if (dc.policy == PcmPolicy::Datacon) {
      // Every line starts unused with all-zeros content.
      for (std::uint64_t p = 0; p < dc.n_lines; ++p) pool_zeros_.push_back(p);
    } else {
      // Identity mapping; pools are not used by the baselines.
      for (std::uint64_t l = 0; l < dc.logical_lines(); ++l) {
        l2p_[l] = l;
        p2l_[l] = l;
        state_[l] = LineState::Mapped;
      }
      for (std::uint64_t p = dc.logical_lines(); p < dc.n_lines; ++p)
        state_[p] = LineState::Spare;
    }
  }

  WriteOutcome handle_write(const MemoryRequest& req) {
    const std::uint64_t now = req.cycle;
    advance_all(now);
    const std::uint64_t logical = logical_line(req.address);
    if (req.payload.size() != cfg_.line_bits())
      throw Error(Errc::BadPayloadWidth, "write payload width mismatch");

    switch (cfg_.datacon.policy) {
      case PcmPolicy::InPlace:
        return write_in_place(logical, req.payload, now);
      case PcmPolicy::PreSet:
        return write_preset(logical, req.payload, now);
      case PcmPolicy::Datacon:
        return write_datacon(logical, req.payload, now);
    }
    return {};
  }

  ReadOutcome handle_read(const MemoryRequest& req) {
    const std::uint64_t now = req.cycle;
    advance_all(now);
    const std::uint64_t logical = logical_line(req.address);
    ReadOutcome out;
    if (l2p_[logical] == kNone) {
      // Never-written line: the controller answers all-zeros without
      // touching any array.
      out.latency = cfg_.pcm.t_read;
      out.data = BitVec::zeros(cfg_.line_bits());
      return out;
    }
    const std::uint64_t phys = l2p_[logical];
    Partition& part = partitions_[partition_of(phys)];
    // Stall to the pulse boundary if the partition is mid-pulse; the pulse
    // completes first, it is never cancelled.
    const std::uint64_t start = std::max(now, part.busy_until);
    advance_partition(part, start);
    check_alive(part);
    out.stall = start - now;
    out.latency = out.stall + cfg_.pcm.t_read;
    out.energy = static_cast<double>(cfg_.line_bits()) * cfg_.pcm.e_read_bit;
    out.data = content_[phys];
    occupy(part, start, cfg_.pcm.t_read);
    return out;
  }

  /// Starts background pulses in idle partitions. Called internally as
  /// time advances; exposed for scheduling tests.
  void schedule_reinit(std::uint64_t now) { advance_all(now); }

  bool device_failed() const { return failed_; }

  std::size_t pool_zeros_size() const { return pool_zeros_.size(); }
  std::size_t pool_ones_size() const { return pool_ones_.size(); }
  std::size_t pending_count() const {
    std::size_t n = 0;
    for (const auto& part : partitions_) n += part.pending.size() + (part.pulse ? 1 : 0);
    return n;
  }
  const PeripheralAgingState& partition_aging(std::uint64_t q) const {
    return partitions_[q].aging;
  }
  double background_energy() const { return background_energy_; }

  /// Verifies pool conservation, translation injectivity and pool-content
  /// claims. Throws on any violation.
  void check_invariants() const {
    const auto& dc = cfg_.datacon;
    std::uint64_t mapped = 0, spare = 0;
    for (auto s : state_) {
      if (s == LineState::Mapped) ++mapped;
      if (s == LineState::Spare) ++spare;
    }
    const std::uint64_t pooled = pool_zeros_.size() + pool_ones_.size();
    if (mapped + spare + pooled + pending_count() != dc.n_lines)
      throw Error(Errc::ConfigInvalid, "invariant: line partition does not cover n_lines");
    std::vector<bool> hit(dc.n_lines, false);
    for (std::uint64_t l = 0; l < l2p_.size(); ++l) {
      const auto p = l2p_[l];
      if (p == kNone) continue;
      if (hit[p]) throw Error(Errc::ConfigInvalid, "invariant: translation not injective");
      hit[p] = true;
      if (p2l_[p] != l) throw Error(Errc::ConfigInvalid, "invariant: reverse map inconsistent");
      if (state_[p] != LineState::Mapped)
        throw Error(Errc::ConfigInvalid, "invariant: mapped line not in Mapped state");
    }
    for (auto p : pool_zeros_)
      if (content_[p].popcount() != 0)
        throw Error(Errc::ConfigInvalid, "invariant: all-zeros pool holds nonzero line");
    for (auto p : pool_ones_)
      if (content_[p].popcount() != cfg_.line_bits())
        throw Error(Errc::ConfigInvalid, "invariant: all-ones pool holds non-ones line");
  }

  /// Runs every request in trace order, then drains outstanding background
  /// pulses. The optional observer sees each serviced access.
  StatsReport simulate(const std::vector<MemoryRequest>& trace,
                       const std::function<void(const MemoryRequest&, const AccessOutcome&)>*
                           observer = nullptr) {
    StatsReport report;
    report.engine = "pcm";
    report.seed = cfg_.seed;
    for (const auto& req : trace) {
      if (failed_) break;
      if (req.kind == RequestKind::Alloc) continue;  // page bookkeeping, no PCM access
      AccessOutcome record;
      record.kind = req.kind;
      try {
        if (req.kind == RequestKind::Write) {
          const auto out = handle_write(req);
          record.latency = out.latency;
          record.stall = out.stall;
          record.demand_energy = out.demand_energy;
          record.redirected = out.redirected;
          record.pool_miss = out.pool_miss;
          report.writes++;
          report.total_latency += out.latency;
          report.demand_energy += out.demand_energy;
          report.redirections += out.redirected ? 1 : 0;
          report.pool_misses += out.pool_miss ? 1 : 0;
        } else {
          const auto out = handle_read(req);
          record.latency = out.latency;
          record.stall = out.stall;
          record.demand_energy = out.energy;
          record.read_data = out.data;
          report.reads++;
          report.total_latency += out.latency;
          report.demand_energy += out.energy;
        }
      } catch (const Error& e) {
        if (e.code() != Errc::DeviceFailed) throw;
        failed_ = true;
        break;
      }
      report.requests++;
      if (observer) (*observer)(req, record);
    }
    drain();
    report.background_energy = background_energy_;
    report.tier_hist["pcm"] = report.reads + report.writes;
    for (std::uint64_t q = 0; q < partitions_.size(); ++q)
      report.aging["p" + std::to_string(q)] = partitions_[q].aging.accrued;
    report.failed = failed_;
    return report;
  }

 private:
  static constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();
  static constexpr std::uint64_t kForever = std::numeric_limits<std::uint64_t>::max();

  enum class LineState : std::uint8_t { Mapped, PoolZeros, PoolOnes, Pending, Spare };
  enum class Activity : std::uint8_t { Idle, Demand, Reinit };

  struct PendingLine {
    std::uint64_t line = 0;
    Precursor target = Precursor::AllZeros;
    std::uint64_t ready_at = 0;
    // PreSet background pulses account energy for a pre-SET that logically
    // happened before the demand write; they leave content untouched.
    bool virtual_preset = false;
    double preset_energy = 0.0;
  };

  struct ActivePulse {
    PendingLine work;
    std::uint64_t ends_at = 0;
  };

  struct Partition {
    std::uint64_t busy_until = 0;
    Activity activity = Activity::Idle;
    std::deque<PendingLine> pending;
    std::optional<ActivePulse> pulse;
    PeripheralAgingState aging;
  };

  std::uint64_t logical_line(std::uint64_t address) const {
    const std::uint64_t line = address / cfg_.line_bytes;
    if (line >= cfg_.datacon.logical_lines())
      throw Error(Errc::AddressOutOfRange,
                  "address 0x" + std::to_string(address) + " beyond logical space of " +
                      std::to_string(cfg_.datacon.logical_lines()) + " lines");
    return line;
  }

  std::uint64_t partition_of(std::uint64_t line) const {
    return line % cfg_.datacon.n_partitions;
  }

  void check_alive(const Partition& part) {
    if (is_failed(part.aging)) {
      failed_ = true;
      throw Error(Errc::DeviceFailed, "peripheral circuit failed");
    }
  }

  void stress(Partition& part) {
    part.aging = accrue_aging(part.aging, cfg_.aging.v_op, 1, cfg_.aging);
  }

  void occupy(Partition& part, std::uint64_t start, std::uint64_t duration) {
    part.busy_until = start + duration;
    part.activity = duration > 0 ? Activity::Demand : part.activity;
    stress(part);
  }

  /// Completes finished pulses and starts queued ones up to time t. Pulses
  /// only begin strictly before t so a demand access arriving at t wins
  /// the partition.
  void advance_partition(Partition& part, std::uint64_t t) {
    for (;;) {
      if (part.activity != Activity::Idle) {
        if (part.busy_until > t) return;
        if (part.pulse) {
          finish_pulse(part);
        }
        part.activity = Activity::Idle;
      }
      if (part.pending.empty()) return;
      const std::uint64_t start = std::max(part.busy_until, part.pending.front().ready_at);
      if (start >= t) return;
      start_pulse(part, start);
    }
  }

  void advance_all(std::uint64_t t) {
    for (auto& part : partitions_) advance_partition(part, t);
  }

  void start_pulse(Partition& part, std::uint64_t start) {
    PendingLine work = part.pending.front();
    part.pending.pop_front();
    std::uint64_t duration;
    if (work.virtual_preset) {
      duration = cfg_.pcm.t_set;
      background_energy_ += work.preset_energy;
    } else {
      const bool to_ones = work.target == Precursor::AllOnes;
      duration = to_ones ? cfg_.pcm.t_set : cfg_.pcm.t_reset;
      const BitVec target_bits =
          to_ones ? BitVec::ones(cfg_.line_bits()) : BitVec::zeros(cfg_.line_bits());
      background_energy_ += write_cost(content_[work.line], target_bits, cfg_.pcm).energy;
    }
    part.pulse = ActivePulse{work, start + duration};
    part.busy_until = start + duration;
    part.activity = Activity::Reinit;
    stress(part);
  }

  void finish_pulse(Partition& part) {
    const PendingLine& work = part.pulse->work;
    if (!work.virtual_preset) {
      const bool to_ones = work.target == Precursor::AllOnes;
      content_[work.line] = to_ones ? BitVec::ones(cfg_.line_bits())
                                    : BitVec::zeros(cfg_.line_bits());
      if (to_ones) {
        pool_ones_.push_back(work.line);
        state_[work.line] = LineState::PoolOnes;
      } else {
        pool_zeros_.push_back(work.line);
        state_[work.line] = LineState::PoolZeros;
      }
    }
    part.pulse.reset();
  }

  /// Releases a previously mapped line for background re-initialization
  /// toward whichever pool is currently shorter (ties favor all-zeros).
  void release_line(std::uint64_t line, std::uint64_t ready_at) {
    const Precursor target = pool_ones_.size() < pool_zeros_.size() ? Precursor::AllOnes
                                                                    : Precursor::AllZeros;
    state_[line] = LineState::Pending;
    partitions_[partition_of(line)].pending.push_back(PendingLine{line, target, ready_at});
  }

  /// Pops a pooled line, preferring one whose partition is idle at `now`
  /// so demand writes do not collide with re-initialization pulses.
  std::uint64_t pop_pool(std::deque<std::uint64_t>& pool, std::uint64_t now) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const Partition& part = partitions_[partition_of(pool[i])];
      if (part.activity == Activity::Idle && part.busy_until <= now) {
        const std::uint64_t line = pool[i];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
        return line;
      }
    }
    const std::uint64_t line = pool.front();
    pool.pop_front();
    return line;
  }

  WriteOutcome service_write(std::uint64_t logical, std::uint64_t phys, const BitVec& payload,
                             std::uint64_t now, const BitVec& charged_precursor, bool redirected,
                             bool pool_miss) {
    Partition& part = partitions_[partition_of(phys)];
    const auto cost = write_cost(charged_precursor, payload, cfg_.pcm);
    const std::uint64_t start = std::max(now, part.busy_until);
    advance_partition(part, start);
    check_alive(part);
    WriteOutcome out;
    out.stall = start - now;
    out.latency = out.stall + cost.latency;
    out.demand_energy = cost.energy;
    out.redirected = redirected;
    out.pool_miss = pool_miss;
    content_[phys] = payload;

    const std::uint64_t prev = l2p_[logical];
    if (prev != phys) {
      if (prev != kNone) {
        p2l_[prev] = kNone;
        release_line(prev, start + cost.latency);
      }
      l2p_[logical] = phys;
      p2l_[phys] = logical;
      state_[phys] = LineState::Mapped;
    }
    occupy(part, start, cost.latency);
    return out;
  }

  WriteOutcome write_in_place(std::uint64_t logical, const BitVec& payload, std::uint64_t now) {
    const std::uint64_t phys = l2p_[logical];
    return service_write(logical, phys, payload, now, content_[phys], /*redirected=*/false,
                         /*pool_miss=*/false);
  }

  WriteOutcome write_preset(std::uint64_t logical, const BitVec& payload, std::uint64_t now) {
    const std::uint64_t phys = l2p_[logical];
    // The demand write sees an all-ones precursor; the SET work that
    // prepared it is charged to background and occupies the partition for
    // one t_set pulse via the same scheduling rule as re-initialization.
    const double preset_energy = static_cast<double>(cfg_.line_bits() -
                                                     content_[phys].popcount()) *
                                 cfg_.pcm.e_set_bit;
    auto out = service_write(logical, phys, payload, now, BitVec::ones(cfg_.line_bits()),
                             /*redirected=*/false, /*pool_miss=*/false);
    PendingLine bg;
    bg.line = phys;
    bg.ready_at = partitions_[partition_of(phys)].busy_until;
    bg.virtual_preset = true;
    bg.preset_energy = preset_energy;
    partitions_[partition_of(phys)].pending.push_back(bg);
    return out;
  }

  WriteOutcome write_datacon(std::uint64_t logical, const BitVec& payload, std::uint64_t now) {
    const double fraction = static_cast<double>(payload.popcount()) /
                            static_cast<double>(cfg_.line_bits());
    const Precursor wanted = choose_precursor(fraction, cfg_.datacon.threshold);
    auto& pool = wanted == Precursor::AllZeros ? pool_zeros_ : pool_ones_;
    auto& other = wanted == Precursor::AllZeros ? pool_ones_ : pool_zeros_;

    if (!pool.empty()) {
      const std::uint64_t phys = pop_pool(pool, now);
      return service_write(logical, phys, payload, now, content_[phys], /*redirected=*/true,
                           /*pool_miss=*/false);
    }
    // Needed pool exhausted: fall back in place when a mapped line exists.
    if (l2p_[logical] != kNone) {
      const std::uint64_t phys = l2p_[logical];
      return service_write(logical, phys, payload, now, content_[phys], /*redirected=*/false,
                           /*pool_miss=*/true);
    }
    // First write to this line: take the wrong-precursor pool if possible.
    if (!other.empty()) {
      const std::uint64_t phys = pop_pool(other, now);
      return service_write(logical, phys, payload, now, content_[phys], /*redirected=*/true,
                           /*pool_miss=*/true);
    }
    // Repurpose a queued (not yet pulsing) pending line.
    for (auto& part : partitions_) {
      if (part.pending.empty()) continue;
      const std::uint64_t phys = part.pending.front().line;
      part.pending.pop_front();
      return service_write(logical, phys, payload, now, content_[phys], /*redirected=*/true,
                           /*pool_miss=*/true);
    }
    // Wait for the earliest active pulse to finish and use its line.
    std::uint64_t earliest = kForever;
    for (const auto& part : partitions_)
      if (part.pulse) earliest = std::min(earliest, part.pulse->ends_at);
    if (earliest != kForever) {
      advance_all(earliest);
      auto& landed = pool_zeros_.empty() ? pool_ones_ : pool_zeros_;
      const std::uint64_t phys = pop_pool(landed, earliest);
      auto out = service_write(logical, phys, payload, earliest, content_[phys],
                               /*redirected=*/true, /*pool_miss=*/true);
      out.stall += earliest - now;
      out.latency += earliest - now;
      return out;
    }
    throw Error(Errc::OutOfSpareLines, "no spare line available for write");
  }

  void drain() { advance_all(kForever); }

  PcmSimConfig cfg_;
  std::vector<BitVec> content_;
  std::vector<std::uint64_t> l2p_;
  std::vector<std::uint64_t> p2l_;
  std::vector<LineState> state_;
  std::deque<std::uint64_t> pool_zeros_;
  std::deque<std::uint64_t> pool_ones_;
  std::vector<Partition> partitions_;
  double background_energy_ = 0.0;
  bool failed_ = false;
};

inline StatsReport simulate_pcm(const std::vector<MemoryRequest>& trace,
                                const PcmSimConfig& cfg) {
  PcmEngine engine(cfg);
  return engine.simulate(trace);
}

}  // namespace pcmkit
