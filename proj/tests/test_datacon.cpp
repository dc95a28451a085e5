#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "oracle.hpp"
#include "pcmkit/config.hpp"
#include "pcmkit/datacon.hpp"
#include "pcmkit/report.hpp"
#include "pcmkit/rng.hpp"

using namespace pcmkit;

namespace {

BitVec alternating(std::size_t n_bits, bool odd_ones) {
  BitVec v(n_bits);
  for (std::size_t i = odd_ones ? 1 : 0; i < n_bits; i += 2) v.set(i, true);
  return v;
}

MemoryRequest write_req(std::uint64_t cycle, std::uint64_t address, BitVec payload) {
  MemoryRequest req;
  req.cycle = cycle;
  req.kind = RequestKind::Write;
  req.address = address;
  req.payload = std::move(payload);
  return req;
}

MemoryRequest read_req(std::uint64_t cycle, std::uint64_t address) {
  MemoryRequest req;
  req.cycle = cycle;
  req.kind = RequestKind::Read;
  req.address = address;
  return req;
}

PcmSimConfig small_config(std::uint64_t n_lines, std::uint64_t n_partitions,
                          double spare_fraction, PcmPolicy policy = PcmPolicy::Datacon) {
  PcmSimConfig cfg;
  cfg.datacon.n_lines = n_lines;
  cfg.datacon.n_partitions = n_partitions;
  cfg.datacon.spare_fraction = spare_fraction;
  cfg.datacon.policy = policy;
  return cfg;
}

}  // namespace

TEST_CASE("count_set_bits on degenerate payloads") {
  REQUIRE(count_set_bits(BitVec::zeros(512)) == 0);
  REQUIRE(count_set_bits(BitVec::ones(512)) == 512);
  REQUIRE(count_set_bits(alternating(512, false)) == 256);
}

TEST_CASE("choose_precursor: strict threshold comparison") {
  REQUIRE(choose_precursor(0.5, 0.6) == Precursor::AllZeros);
  REQUIRE(choose_precursor(0.6, 0.6) == Precursor::AllOnes);  // boundary selects all-ones
  REQUIRE(choose_precursor(1.0, 0.6) == Precursor::AllOnes);
}

TEST_CASE("datacon: half-SET payload redirects to an all-zeros line") {
  PcmEngine engine(small_config(64, 4, 0.25));
  const auto out = engine.handle_write(write_req(0, 0, alternating(512, false)));
  REQUIRE(out.redirected);
  REQUIRE_FALSE(out.pool_miss);
  REQUIRE(out.latency == 8);  // single SET phase
  REQUIRE(out.demand_energy == 256.0);
}

TEST_CASE("datacon: all-ones payload onto a matching precursor is free") {
  PcmEngine engine(small_config(64, 4, 0.25));
  // Overwrite once so a released line gets re-initialized toward all-ones.
  engine.handle_write(write_req(0, 0, alternating(512, false)));
  engine.handle_write(write_req(100, 0, alternating(512, true)));
  engine.schedule_reinit(500);
  REQUIRE(engine.pool_ones_size() >= 1);
  const auto out = engine.handle_write(write_req(500, 64, BitVec::ones(512)));
  REQUIRE(out.redirected);
  REQUIRE(out.latency == 0);
  REQUIRE(out.demand_energy == 0.0);
}

TEST_CASE("datacon: exhausted pools fall back to an in-place write") {
  // 4 lines, 1 partition, 2 spares. Same-cycle overwrites drain the pool
  // faster than re-initialization can refill it.
  PcmEngine engine(small_config(4, 1, 0.5));
  const auto a = alternating(512, false);
  const auto b = alternating(512, true);
  REQUIRE(engine.handle_write(write_req(0, 0, a)).latency == 8);
  REQUIRE(engine.handle_write(write_req(0, 0, a)).latency == 16);  // stalls behind demand
  REQUIRE(engine.handle_write(write_req(0, 0, a)).latency == 24);
  REQUIRE(engine.handle_write(write_req(0, 0, a)).latency == 32);
  const auto out = engine.handle_write(write_req(0, 0, b));
  REQUIRE(out.pool_miss);
  REQUIRE_FALSE(out.redirected);
  // Two-phase in-place write after the queued demands: 32 + t_set + t_reset.
  REQUIRE(out.latency == 41);
  REQUIRE(out.demand_energy == 256.0 * 1.0 + 256.0 * 1.5);
}

TEST_CASE("datacon: first write to a fresh line repurposes a pending line when pools are dry") {
  PcmEngine engine(small_config(4, 1, 0.5));
  const auto a = alternating(512, false);
  engine.handle_write(write_req(0, 0, a));
  engine.handle_write(write_req(0, 0, a));
  engine.handle_write(write_req(0, 0, a));
  engine.handle_write(write_req(0, 0, a));
  REQUIRE(engine.pool_zeros_size() == 0);
  REQUIRE(engine.pool_ones_size() == 0);
  const auto out = engine.handle_write(write_req(0, 64, alternating(512, true)));
  REQUIRE(out.pool_miss);
  REQUIRE(out.redirected);
  REQUIRE(out.latency == 41);  // stalls to cycle 32, then a two-phase write
}

TEST_CASE("datacon: reads stall to the end of an in-flight reinit pulse") {
  PcmEngine engine(small_config(8, 1, 0.5));
  const auto a = alternating(512, false);
  engine.handle_write(write_req(0, 0, a));
  const auto b = alternating(512, true);
  engine.handle_write(write_req(10, 0, b));  // releases the old line at cycle 18
  // The released line's SET pulse runs [18, 26); a read issued 2 cycles
  // before the boundary pays exactly that stall.
  const auto out = engine.handle_read(read_req(24, 0));
  REQUIRE(out.stall == 2);
  REQUIRE(out.latency == 1 + 2);
  REQUIRE(out.data == b);
}

TEST_CASE("datacon: read of a never-written line returns zeros at t_read") {
  PcmEngine engine(small_config(64, 4, 0.25));
  const auto out = engine.handle_read(read_req(5, 0x40));
  REQUIRE(out.latency == 1);
  REQUIRE(out.data == BitVec::zeros(512));
  REQUIRE(out.energy == 0.0);
}

TEST_CASE("datacon: read after write returns the payload bit-exactly") {
  PcmEngine engine(small_config(64, 4, 0.25));
  BitVec payload(512);
  Rng rng(5);
  for (std::size_t i = 0; i < 512; ++i) payload.set(i, rng.bernoulli(0.4));
  engine.handle_write(write_req(0, 128, payload));
  REQUIRE(engine.handle_read(read_req(50, 128)).data == payload);
}

TEST_CASE("reinit pulses run concurrently in distinct partitions") {
  PcmEngine engine(small_config(8, 2, 0.5));
  const auto a = alternating(512, false);
  const auto b = alternating(512, true);
  engine.handle_write(write_req(0, 0, a));    // line 0, partition 0
  engine.handle_write(write_req(0, 64, a));   // line 1, partition 1
  engine.handle_write(write_req(20, 0, b));   // releases line 0 at 28
  engine.handle_write(write_req(20, 64, b));  // releases line 1 at 28
  // Both pulses run [28, 36) in their own partitions; serialized they
  // could not both be done by 36.
  engine.schedule_reinit(27);
  REQUIRE(engine.pool_ones_size() == 0);  // deferred while demand holds the partitions
  engine.schedule_reinit(36);
  REQUIRE(engine.pool_ones_size() == 2);
}

TEST_CASE("datacon: simulate on an empty trace returns a zeroed report") {
  PcmSimConfig cfg;
  const auto report = simulate_pcm({}, cfg);
  REQUIRE(report.requests == 0);
  REQUIRE(report.total_latency == 0);
  REQUIRE(report.demand_energy == 0.0);
  REQUIRE(report.background_energy == 0.0);
  REQUIRE(report.effective_access_latency() == 0.0);
  REQUIRE_FALSE(report.failed);
}

TEST_CASE("datacon: single write is never slower than in-place") {
  const auto payload = alternating(512, false);
  PcmEngine datacon(small_config(64, 4, 0.25, PcmPolicy::Datacon));
  PcmEngine inplace(small_config(64, 4, 0.25, PcmPolicy::InPlace));
  const auto d = datacon.handle_write(write_req(0, 0, payload));
  const auto i = inplace.handle_write(write_req(0, 0, payload));
  REQUIRE(d.latency <= i.latency);
}

TEST_CASE("datacon: read results match the flat reference memory") {
  TraceSpec spec;
  spec.n_requests = 20000;
  spec.read_ratio = 0.4;
  spec.set_bit_density = 0.5;
  spec.seed = 41;
  spec.n_addresses = 200;
  const auto trace = generate_trace(spec);

  PcmSimConfig cfg = small_config(1024, 8, 0.05);
  testkit::FlatMemory flat(cfg.line_bits());
  std::uint64_t reads_checked = 0;
  std::function<void(const MemoryRequest&, const AccessOutcome&)> observer =
      [&](const MemoryRequest& req, const AccessOutcome& out) {
        const auto line = req.address / cfg.line_bytes;
        if (req.kind == RequestKind::Write) {
          flat.write(line, req.payload);
        } else {
          REQUIRE(out.read_data == flat.read(line));
          reads_checked++;
        }
      };
  PcmEngine engine(cfg);
  engine.simulate(trace, &observer);
  REQUIRE(reads_checked > 5000);
}

TEST_CASE("datacon: demand energy equals the flat per-write oracle") {
  TraceSpec spec;
  spec.n_requests = 2000;
  spec.set_bit_density = 0.5;
  spec.seed = 43;
  spec.n_addresses = 100;
  spec.cycle_stride = 20;
  const auto trace = generate_trace(spec);
  PcmSimConfig cfg = small_config(1024, 8, 0.05);

  double expected = 0.0;
  for (const auto& req : trace)
    expected += testkit::datacon_demand_energy(req.payload, cfg.datacon.threshold,
                                               cfg.pcm.e_set_bit, cfg.pcm.e_reset_bit);
  const auto report = simulate_pcm(trace, cfg);
  REQUIRE(report.pool_misses == 0);
  REQUIRE(report.demand_energy == expected);

  cfg.datacon.policy = PcmPolicy::PreSet;
  double preset_expected = 0.0;
  for (const auto& req : trace)
    preset_expected += testkit::preset_demand_energy(req.payload, cfg.pcm.e_reset_bit);
  const auto preset_report = simulate_pcm(trace, cfg);
  REQUIRE(preset_report.demand_energy == preset_expected);
}

TEST_CASE("datacon: per-request latency never exceeds the in-place run") {
  TraceSpec spec;
  spec.n_requests = 5000;
  spec.set_bit_density = 0.5;
  spec.seed = 47;
  spec.n_addresses = 200;
  spec.cycle_stride = 20;
  const auto trace = generate_trace(spec);
  const PcmSimConfig cfg = small_config(1024, 8, 0.05);

  auto latencies = [&](PcmPolicy policy) {
    PcmSimConfig run = cfg;
    run.datacon.policy = policy;
    std::vector<std::uint64_t> out;
    std::function<void(const MemoryRequest&, const AccessOutcome&)> observer =
        [&](const MemoryRequest&, const AccessOutcome& o) { out.push_back(o.latency); };
    PcmEngine engine(run);
    const auto report = engine.simulate(trace, &observer);
    REQUIRE(report.pool_misses == 0);
    return out;
  };
  const auto datacon = latencies(PcmPolicy::Datacon);
  const auto inplace = latencies(PcmPolicy::InPlace);
  REQUIRE(datacon.size() == inplace.size());
  for (std::size_t i = 0; i < datacon.size(); ++i) REQUIRE(datacon[i] <= inplace[i]);
}

TEST_CASE("preset: demand is the RESET phase, background carries the pre-SET") {
  PcmEngine engine(small_config(64, 4, 0.25, PcmPolicy::PreSet));
  const auto payload = alternating(512, false);  // 256 ones
  const auto out = engine.handle_write(write_req(0, 0, payload));
  REQUIRE(out.latency == 1);  // t_reset only
  REQUIRE(out.demand_energy == 256.0 * 1.5);
  engine.schedule_reinit(1000);
  REQUIRE(engine.background_energy() == 512.0);  // pre-SET of the all-zeros line
}

TEST_CASE("datacon: invariants hold under randomized mixed operations") {
  PcmSimConfig cfg = small_config(64, 4, 0.25);
  cfg.line_bytes = 8;
  PcmEngine engine(cfg);
  Rng rng(53);
  std::uint64_t cycle = 0;
  for (int op = 0; op < 20000; ++op) {
    cycle += rng.below(3);  // bursts and gaps
    const std::uint64_t address = rng.below(cfg.datacon.logical_lines()) * cfg.line_bytes;
    if (rng.bernoulli(0.7)) {
      BitVec payload(cfg.line_bits());
      const double density = rng.uniform();
      for (std::size_t i = 0; i < payload.size(); ++i) payload.set(i, rng.bernoulli(density));
      engine.handle_write(write_req(cycle, address, payload));
    } else {
      engine.handle_read(read_req(cycle, address));
    }
    engine.check_invariants();
  }
  engine.schedule_reinit(cycle + 100000);
  engine.check_invariants();
}

TEST_CASE("datacon: identical runs emit identical reports") {
  TraceSpec spec;
  spec.n_requests = 3000;
  spec.read_ratio = 0.2;
  spec.seed = 59;
  spec.n_addresses = 100;
  const auto trace = generate_trace(spec);
  const PcmSimConfig cfg = small_config(512, 8, 0.05);
  const auto a = emit_report(simulate_pcm(trace, cfg), ReportFormat::Json);
  const auto b = emit_report(simulate_pcm(trace, cfg), ReportFormat::Json);
  REQUIRE(a == b);
}

TEST_CASE("datacon: a failed peripheral circuit stops the run") {
  PcmSimConfig cfg = small_config(64, 4, 0.25);
  cfg.aging.failure_threshold = 1e-15;
  TraceSpec spec;
  spec.n_requests = 100;
  spec.n_addresses = 8;
  spec.seed = 61;
  const auto report = simulate_pcm(generate_trace(spec), cfg);
  REQUIRE(report.failed);
  REQUIRE(report.requests < 100);
}

TEST_CASE("datacon: addresses beyond the logical space are rejected") {
  PcmEngine engine(small_config(64, 4, 0.25));
  const auto too_far = 64ull * 64ull;  // line 64 of 48 logical lines
  REQUIRE_THROWS_AS(engine.handle_read(read_req(0, too_far)), Error);
}

TEST_CASE("datacon config: invariant violations carry field paths") {
  nlohmann::json j;
  j["datacon"]["threshold"] = 1.5;
  REQUIRE_THROWS_AS(load_pcm_sim_config(j), Error);
  nlohmann::json k;
  k["datacon"]["n_lines"] = 100;
  k["datacon"]["n_partitions"] = 7;
  REQUIRE_THROWS_AS(load_pcm_sim_config(k), Error);
  nlohmann::json m;
  m["datacon"]["n_lines"] = 10;
  m["datacon"]["n_partitions"] = 2;
  m["datacon"]["spare_fraction"] = 0.05;  // 0.5 lines of spare
  REQUIRE_THROWS_AS(load_pcm_sim_config(m), Error);
  nlohmann::json neg;
  neg["datacon"]["n_lines"] = -5;  // would wrap into an unsigned count
  REQUIRE_THROWS_AS(load_pcm_sim_config(neg), Error);
}
