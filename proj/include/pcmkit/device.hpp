#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "pcmkit/bitvec.hpp"
#include "pcmkit/errors.hpp"

namespace pcmkit {

// PCM cell timing and per-transition energy. SET (0->1, crystallize) is the
// slow cheap pulse, RESET (1->0, amorphize) the fast expensive one. The
// 8:1 SET:RESET latency ratio and the 1.0/1.5 energy pair are normalized
// defaults; the energy pair puts the demand-energy crossover between an
// all-zeros and an all-ones precursor exactly at a SET fraction of 0.6
// (f*e_set = (1-f)*e_reset at f = 0.6).
struct PcmParams {
  std::uint64_t t_set = 8;
  std::uint64_t t_reset = 1;
  std::uint64_t t_read = 1;
  double e_set_bit = 1.0;
  double e_reset_bit = 1.5;
  double e_read_bit = 0.1;
  // When set, an in-place write overlaps its SET and RESET phases
  // (latency max instead of sum).
  bool overlap_phases = false;
};

/// Segmented-bitline shape: frame counts per segment plus the flat cycle
/// penalty and the raised supply voltage a far access pays.
struct SegmentParams {
  std::uint64_t near_frames = 64;
  std::uint64_t far_frames = 192;
  std::uint64_t extra_far_latency = 6;
  double v_near = 1.0;
  double v_far = 1.2;
};

struct DramParams {
  std::uint64_t t_access_near = 1;
  std::uint64_t t_access_far = 7;
  double e_access_bit = 0.1;
};

/// Power-law stress accrual k * V^gamma * t. The voltage exponent is the
/// standard NBTI-style abstraction; all three knobs are config-swappable.
struct AgingParams {
  double k = 1e-9;
  double gamma = 4.0;
  double failure_threshold = 1.0;
  double v_op = 1.0;  // operating voltage for unsegmented arrays
};

/// Accumulated dimensionless stress on one peripheral circuit (sense
/// amplifier + write driver). Monotonically nondecreasing.
struct PeripheralAgingState {
  double accrued = 0.0;
  double failure_threshold = 1.0;
};

enum class Segment { Near, Far };

struct WriteCost {
  std::uint64_t latency = 0;
  double energy = 0.0;
  std::uint64_t n_set = 0;
  std::uint64_t n_reset = 0;
};

/// Cost of programming `new_bits` over `old_bits` in place. Only bits that
/// change are pulsed; a write with both transition kinds serializes a SET
/// phase and a RESET phase unless overlap_phases is set.
inline WriteCost write_cost(const BitVec& old_bits, const BitVec& new_bits, const PcmParams& p) {
  if (old_bits.size() != new_bits.size())
    throw Error(Errc::LengthMismatch, "write_cost: bit vector length mismatch");
  WriteCost cost;
  cost.n_set = old_bits.count_rises(new_bits);
  cost.n_reset = old_bits.count_falls(new_bits);
  cost.energy = static_cast<double>(cost.n_set) * p.e_set_bit +
                static_cast<double>(cost.n_reset) * p.e_reset_bit;
  if (cost.n_set > 0 && cost.n_reset > 0)
    cost.latency = p.overlap_phases ? std::max(p.t_set, p.t_reset) : p.t_set + p.t_reset;
  else if (cost.n_set > 0)
    cost.latency = p.t_set;
  else if (cost.n_reset > 0)
    cost.latency = p.t_reset;
  return cost;
}

inline std::uint64_t access_latency(Segment segment, std::uint64_t base, const SegmentParams& s) {
  return segment == Segment::Near ? base : base + s.extra_far_latency;
}

inline double aging_increment(double voltage, std::uint64_t duration, const AgingParams& a) {
  return a.k * std::pow(voltage, a.gamma) * static_cast<double>(duration);
}

inline PeripheralAgingState accrue_aging(PeripheralAgingState state, double voltage,
                                         std::uint64_t duration, double k, double gamma) {
  if (!(voltage > 0.0))
    throw Error(Errc::NonPositiveVoltage, "accrue_aging: voltage must be > 0");
  state.accrued += k * std::pow(voltage, gamma) * static_cast<double>(duration);
  return state;
}

inline PeripheralAgingState accrue_aging(PeripheralAgingState state, double voltage,
                                         std::uint64_t duration, const AgingParams& a) {
  return accrue_aging(state, voltage, duration, a.k, a.gamma);
}

inline bool is_failed(const PeripheralAgingState& state) {
  return state.accrued >= state.failure_threshold;
}

}  // namespace pcmkit
