#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcmkit/bitvec.hpp"
#include "pcmkit/device.hpp"
#include "pcmkit/errors.hpp"
#include "pcmkit/report.hpp"
#include "pcmkit/rng.hpp"
#include "pcmkit/trace.hpp"

namespace pcmkit {

enum class MemDevice { Dram, Pcm };

/// One of the four (device, segment) tiers. Index order doubles as the
/// fast-to-slow fallback order.
struct TierId {
  MemDevice device = MemDevice::Dram;
  Segment segment = Segment::Near;

  bool operator==(const TierId&) const = default;
};

inline constexpr int kNumTiers = 4;
inline constexpr std::array<TierId, kNumTiers> kTierOrder = {
    TierId{MemDevice::Dram, Segment::Near}, TierId{MemDevice::Dram, Segment::Far},
    TierId{MemDevice::Pcm, Segment::Near}, TierId{MemDevice::Pcm, Segment::Far}};

inline int tier_index(TierId t) {
  return (t.device == MemDevice::Pcm ? 2 : 0) + (t.segment == Segment::Far ? 1 : 0);
}

inline const char* tier_name(int index) {
  static const char* names[kNumTiers] = {"dram.near", "dram.far", "pcm.near", "pcm.far"};
  return names[index];
}

inline std::optional<int> tier_index_from_name(const std::string& name) {
  for (int i = 0; i < kNumTiers; ++i) {
    std::string canonical = tier_name(i);
    std::string underscored = canonical;
    std::replace(underscored.begin(), underscored.end(), '.', '_');
    if (name == canonical || name == underscored) return i;
  }
  return std::nullopt;
}

enum class IntensityClass { WriteIntensive, ReadIntensive, Cold };

inline const char* class_name(IntensityClass c) {
  switch (c) {
    case IntensityClass::WriteIntensive: return "write_intensive";
    case IntensityClass::ReadIntensive: return "read_intensive";
    default: return "cold";
  }
}

/// Per-allocation-site EWMA of retired epoch activity; the predictor's
/// whole state.
struct PredictorState {
  struct SiteStats {
    double avg_reads = 0.0;
    double avg_writes = 0.0;
    std::uint64_t confidence = 0;
  };
  std::map<std::uint64_t, SiteStats> sites;
};

enum class HybridPolicy { Mneme, Nimble };

struct MnemeConfig {
  std::array<std::uint64_t, kNumTiers> frames = {64, 64, 64, 64};
  std::uint64_t epoch_length = 100000;
  std::uint64_t migration_budget = 64;
  std::uint64_t writes_hot = 10;
  std::uint64_t reads_hot = 10;
  double predictor_decay = 0.5;
  HybridPolicy policy = HybridPolicy::Mneme;
  IntensityClass default_class = IntensityClass::Cold;
  // Feed the predictor each page's true stationary class (derived from the
  // whole trace) instead of site history.
  bool clairvoyant = false;
  // Debug knob: force every allocation into one tier and disable
  // migration.
  std::optional<int> pin_tier;
};

struct HybridSimConfig {
  std::uint64_t line_bytes = 64;
  PcmParams pcm;
  DramParams dram;
  SegmentParams segment;
  AgingParams aging;
  MnemeConfig mneme;
  std::uint64_t seed = 0;

  std::uint64_t line_bits() const { return line_bytes * 8; }
};

inline constexpr std::uint64_t kPageBytes = 4096;

inline IntensityClass classify_counts(double reads, double writes, const MnemeConfig& cfg) {
  if (writes >= static_cast<double>(cfg.writes_hot)) return IntensityClass::WriteIntensive;
  if (reads >= static_cast<double>(cfg.reads_hot)) return IntensityClass::ReadIntensive;
  return IntensityClass::Cold;
}

/// Class for a new page from its allocation site's history; unseen sites
/// get the configured default.
inline IntensityClass predict_intensity(std::uint64_t site_id, const PredictorState& predictor,
                                        const MnemeConfig& cfg) {
  const auto it = predictor.sites.find(site_id);
  if (it == predictor.sites.end() || it->second.confidence == 0) return cfg.default_class;
  return classify_counts(it->second.avg_reads, it->second.avg_writes, cfg);
}

inline int preferred_tier(IntensityClass c) {
  switch (c) {
    case IntensityClass::WriteIntensive: return tier_index({MemDevice::Dram, Segment::Near});
    case IntensityClass::ReadIntensive: return tier_index({MemDevice::Pcm, Segment::Near});
    default: return tier_index({MemDevice::Pcm, Segment::Far});
  }
}

/// Preferred tier for the class, else the first free tier in the fixed
/// fallback order, skipping the preferred one.
inline int initial_place(IntensityClass c, const std::array<std::uint64_t, kNumTiers>& occupancy,
                         const std::array<std::uint64_t, kNumTiers>& frames) {
  const int want = preferred_tier(c);
  if (occupancy[want] < frames[want]) return want;
  for (int t = 0; t < kNumTiers; ++t) {
    if (t == want) continue;
    if (occupancy[t] < frames[t]) return t;
  }
  throw Error(Errc::OutOfMemory, "all tiers full");
}

/// Uniformly random tier among those with a free frame.
inline int nimble_place(Rng& rng, const std::array<std::uint64_t, kNumTiers>& occupancy,
                        const std::array<std::uint64_t, kNumTiers>& frames) {
  std::array<int, kNumTiers> free_tiers{};
  int n_free = 0;
  for (int t = 0; t < kNumTiers; ++t)
    if (occupancy[t] < frames[t]) free_tiers[n_free++] = t;
  if (n_free == 0) throw Error(Errc::OutOfMemory, "all tiers full");
  return free_tiers[rng.below(static_cast<std::uint64_t>(n_free))];
}

struct Migration {
  std::uint64_t vpn = 0;
  int from = 0;
  int to = 0;
};

// Hybrid DRAM-PCM simulator over segmented bitlines. Pages are placed at
// allocation (predicted class under Mneme, random free tier under Nimble)
// and revisited at every epoch boundary. Each access pays its tier's
// latency and energy and stresses that tier's peripheral circuit at the
// segment voltage for one unit.
class HybridEngine {
 public:
  HybridEngine(const HybridSimConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed) {
    for (auto& st : tier_aging_) st.failure_threshold = cfg_.aging.failure_threshold;
  }

  StatsReport simulate(const std::vector<MemoryRequest>& trace) {
    if (cfg_.mneme.clairvoyant) derive_true_classes(trace);
    StatsReport report;
    report.engine = "hybrid";
    report.seed = cfg_.seed;
    std::uint64_t epoch_end = cfg_.mneme.epoch_length;
    for (const auto& req : trace) {
      if (failed_) break;
      while (req.cycle >= epoch_end) {
        run_end_epoch();
        epoch_end += cfg_.mneme.epoch_length;
      }
      switch (req.kind) {
        case RequestKind::Alloc:
          handle_alloc(req);
          break;
        case RequestKind::Read:
        case RequestKind::Write:
          handle_access(req, report);
          break;
      }
    }
    run_end_epoch();  // close the final partial epoch
    report.migrations = migrations_;
    report.background_energy = background_energy_;
    for (int t = 0; t < kNumTiers; ++t) {
      report.tier_hist[tier_name(t)] = tier_accesses_[t];
      report.aging[tier_name(t)] = tier_aging_[t].accrued;
    }
    report.failed = failed_;
    return report;
  }

  const PredictorState& predictor() const { return predictor_; }
  const std::array<std::uint64_t, kNumTiers>& occupancy() const { return occupancy_; }

 private:
  struct Page {
    std::uint64_t vpn = 0;
    std::uint64_t site_id = 0;
    int tier = 0;
    std::uint64_t reads_epoch = 0;
    std::uint64_t writes_epoch = 0;
    IntensityClass predicted = IntensityClass::Cold;
    IntensityClass observed = IntensityClass::Cold;
    int mismatch_streak = 0;
  };

  void handle_alloc(const MemoryRequest& req) {
    const std::uint64_t vpn = req.address / kPageBytes;
    if (pages_.count(vpn)) return;  // duplicate alloc is a no-op
    Page page;
    page.vpn = vpn;
    page.site_id = req.site_id;
    page.predicted = cfg_.mneme.clairvoyant
                         ? true_class_.at(vpn)
                         : predict_intensity(req.site_id, predictor_, cfg_.mneme);
    page.observed = page.predicted;
    if (cfg_.mneme.pin_tier) {
      page.tier = *cfg_.mneme.pin_tier;
      if (occupancy_[page.tier] >= cfg_.mneme.frames[page.tier])
        throw Error(Errc::OutOfMemory, "pinned tier full");
    } else if (cfg_.mneme.policy == HybridPolicy::Nimble) {
      page.tier = nimble_place(rng_, occupancy_, cfg_.mneme.frames);
    } else {
      page.tier = initial_place(page.predicted, occupancy_, cfg_.mneme.frames);
    }
    occupancy_[page.tier]++;
    pages_.emplace(vpn, page);
  }

  void handle_access(const MemoryRequest& req, StatsReport& report) {
    const std::uint64_t vpn = req.address / kPageBytes;
    const auto it = pages_.find(vpn);
    if (it == pages_.end())
      throw Error(Errc::UnallocatedAccess,
                  "access to unallocated page vpn=" + std::to_string(vpn));
    Page& page = it->second;
    const TierId tier = kTierOrder[static_cast<std::size_t>(page.tier)];
    if (is_failed(tier_aging_[page.tier])) {
      failed_ = true;
      return;
    }

    std::uint64_t latency = 0;
    double energy = 0.0;
    if (req.kind == RequestKind::Read) {
      if (tier.device == MemDevice::Dram) {
        latency = tier.segment == Segment::Near ? cfg_.dram.t_access_near
                                                : cfg_.dram.t_access_far;
        energy = static_cast<double>(cfg_.line_bits()) * cfg_.dram.e_access_bit;
      } else {
        latency = access_latency(tier.segment, cfg_.pcm.t_read, cfg_.segment);
        energy = static_cast<double>(cfg_.line_bits()) * cfg_.pcm.e_read_bit;
      }
      page.reads_epoch++;
      report.reads++;
    } else {
      if (req.payload.size() != cfg_.line_bits())
        throw Error(Errc::BadPayloadWidth, "write payload width mismatch");
      if (tier.device == MemDevice::Dram) {
        latency = tier.segment == Segment::Near ? cfg_.dram.t_access_near
                                                : cfg_.dram.t_access_far;
        energy = static_cast<double>(cfg_.line_bits()) * cfg_.dram.e_access_bit;
        line_content(req.address) = req.payload;
      } else {
        BitVec& old = line_content(req.address);
        const auto cost = write_cost(old, req.payload, cfg_.pcm);
        latency = access_latency(tier.segment, cost.latency, cfg_.segment);
        energy = cost.energy;
        old = req.payload;
      }
      page.writes_epoch++;
      report.writes++;
    }

    const double voltage =
        tier.segment == Segment::Near ? cfg_.segment.v_near : cfg_.segment.v_far;
    tier_aging_[page.tier] = accrue_aging(tier_aging_[page.tier], voltage, 1, cfg_.aging);
    tier_accesses_[page.tier]++;
    report.requests++;
    report.total_latency += latency;
    report.demand_energy += energy;
  }

  BitVec& line_content(std::uint64_t address) {
    const std::uint64_t key = address / cfg_.line_bytes;
    auto [it, inserted] = content_.try_emplace(key, BitVec());
    if (inserted) it->second = BitVec::zeros(cfg_.line_bits());
    return it->second;
  }

  /// One full-page read at the source tier plus one full-page write at the
  /// destination, charged to background energy.
  void charge_migration(const Page& page, int from, int to) {
    const std::uint64_t page_bits = kPageBytes * 8;
    auto side_energy = [&](int t, bool is_write) {
      const TierId tier = kTierOrder[static_cast<std::size_t>(t)];
      if (tier.device == MemDevice::Dram)
        return static_cast<double>(page_bits) * cfg_.dram.e_access_bit;
      if (!is_write) return static_cast<double>(page_bits) * cfg_.pcm.e_read_bit;
      // PCM page write onto fresh frames: every stored line is programmed
      // from an all-zeros precursor.
      double e = 0.0;
      const std::uint64_t first_line = page.vpn * (kPageBytes / cfg_.line_bytes);
      const std::uint64_t lines = kPageBytes / cfg_.line_bytes;
      for (std::uint64_t l = 0; l < lines; ++l) {
        const auto it = content_.find(first_line + l);
        if (it == content_.end()) continue;
        e += static_cast<double>(it->second.popcount()) * cfg_.pcm.e_set_bit;
      }
      return e;
    };
    background_energy_ += side_energy(from, false) + side_energy(to, true);
    auto stress = [&](int t) {
      const TierId tier = kTierOrder[static_cast<std::size_t>(t)];
      const double v = tier.segment == Segment::Near ? cfg_.segment.v_near : cfg_.segment.v_far;
      tier_aging_[t] = accrue_aging(tier_aging_[t], v, 1, cfg_.aging);
    };
    stress(from);
    stress(to);
  }

  void do_migration(Page& page, int to, std::vector<Migration>& out) {
    charge_migration(page, page.tier, to);
    out.push_back({page.vpn, page.tier, to});
    occupancy_[page.tier]--;
    occupancy_[to]++;
    page.tier = to;
    migrations_++;
  }

  std::vector<Migration> run_end_epoch() {
    std::vector<Migration> moved;
    for (auto& [vpn, page] : pages_)
      page.observed = classify_counts(static_cast<double>(page.reads_epoch),
                                      static_cast<double>(page.writes_epoch), cfg_.mneme);

    if (!cfg_.mneme.pin_tier) {
      if (cfg_.mneme.policy == HybridPolicy::Mneme)
        mneme_migrations(moved);
      else
        nimble_migrations(moved);
    }

    // Retire epoch stats into the site predictor, then reset counters.
    for (auto& [vpn, page] : pages_) {
      auto& site = predictor_.sites[page.site_id];
      const double d = cfg_.mneme.predictor_decay;
      site.avg_reads = (1.0 - d) * site.avg_reads + d * static_cast<double>(page.reads_epoch);
      site.avg_writes = (1.0 - d) * site.avg_writes + d * static_cast<double>(page.writes_epoch);
      site.confidence++;
      page.reads_epoch = 0;
      page.writes_epoch = 0;
    }
    return moved;
  }

  /// Pages sorted hottest-first by epoch access count (vpn breaks ties).
  std::vector<Page*> pages_by_heat() {
    std::vector<Page*> order;
    order.reserve(pages_.size());
    for (auto& [vpn, page] : pages_) order.push_back(&page);
    std::sort(order.begin(), order.end(), [](const Page* a, const Page* b) {
      const auto ka = a->reads_epoch + a->writes_epoch;
      const auto kb = b->reads_epoch + b->writes_epoch;
      if (ka != kb) return ka > kb;
      return a->vpn < b->vpn;
    });
    return order;
  }

  /// Migrate only pages whose observed class has disagreed with their tier
  /// for two consecutive epochs, hottest first, within budget.
  void mneme_migrations(std::vector<Migration>& out) {
    for (Page* page : pages_by_heat()) {
      const bool mismatched = page->tier != preferred_tier(page->observed);
      page->mismatch_streak = mismatched ? page->mismatch_streak + 1 : 0;
    }
    std::uint64_t budget = cfg_.mneme.migration_budget;
    for (Page* page : pages_by_heat()) {
      if (budget == 0) break;
      if (page->mismatch_streak < 2) continue;
      occupancy_[page->tier]--;  // the page's own frame frees up on a move
      int dest;
      try {
        dest = initial_place(page->observed, occupancy_, cfg_.mneme.frames);
      } catch (const Error&) {
        occupancy_[page->tier]++;
        continue;
      }
      occupancy_[page->tier]++;
      if (dest == page->tier) continue;  // no better frame available
      do_migration(*page, dest, out);
      page->mismatch_streak = 0;
      budget--;
    }
  }

  /// Reactive ranking: hottest pages move toward the fastest tier with a
  /// free frame, swapping with the coldest resident when full.
  void nimble_migrations(std::vector<Migration>& out) {
    std::uint64_t budget = cfg_.mneme.migration_budget;
    for (Page* page : pages_by_heat()) {
      if (budget == 0) break;
      const auto heat = page->reads_epoch + page->writes_epoch;
      for (int t = 0; t < page->tier; ++t) {
        if (occupancy_[t] < cfg_.mneme.frames[t]) {
          do_migration(*page, t, out);
          budget--;
          break;
        }
        // Full: find the coldest resident of t; swap if strictly colder.
        Page* coldest = nullptr;
        for (auto& [vpn, other] : pages_) {
          if (other.tier != t) continue;
          if (!coldest || other.reads_epoch + other.writes_epoch <
                              coldest->reads_epoch + coldest->writes_epoch)
            coldest = &other;
        }
        if (coldest && coldest->reads_epoch + coldest->writes_epoch < heat) {
          if (budget < 2) { budget = 0; break; }
          const int home = page->tier;
          do_migration(*coldest, home, out);
          do_migration(*page, t, out);
          budget -= 2;
          break;
        }
      }
    }
  }

  /// Clairvoyant predictor support: each page's stationary class is its
  /// modal per-epoch class over the whole trace.
  void derive_true_classes(const std::vector<MemoryRequest>& trace) {
    struct Counts {
      std::uint64_t reads = 0, writes = 0;
      std::map<int, int> class_votes;
    };
    std::map<std::uint64_t, Counts> per_page;
    std::uint64_t epoch_end = cfg_.mneme.epoch_length;
    auto close_epoch = [&]() {
      for (auto& [vpn, c] : per_page) {
        const auto cls = classify_counts(static_cast<double>(c.reads),
                                         static_cast<double>(c.writes), cfg_.mneme);
        c.class_votes[static_cast<int>(cls)]++;
        c.reads = 0;
        c.writes = 0;
      }
    };
    for (const auto& req : trace) {
      while (req.cycle >= epoch_end) {
        close_epoch();
        epoch_end += cfg_.mneme.epoch_length;
      }
      if (req.kind == RequestKind::Alloc) {
        per_page.try_emplace(req.address / kPageBytes);
      } else {
        auto& c = per_page[req.address / kPageBytes];
        (req.kind == RequestKind::Read ? c.reads : c.writes)++;
      }
    }
    close_epoch();
    true_class_.clear();
    for (const auto& [vpn, c] : per_page) {
      // Modal class; ties go to the more intense class (lower enum value).
      int best_class = static_cast<int>(IntensityClass::Cold);
      int best_votes = -1;
      for (const auto& [cls, votes] : c.class_votes) {
        if (votes > best_votes || (votes == best_votes && cls < best_class)) {
          best_class = cls;
          best_votes = votes;
        }
      }
      true_class_[vpn] = static_cast<IntensityClass>(best_class);
    }
  }

  HybridSimConfig cfg_;
  Rng rng_;
  std::map<std::uint64_t, Page> pages_;
  std::array<std::uint64_t, kNumTiers> occupancy_{};
  std::array<std::uint64_t, kNumTiers> tier_accesses_{};
  std::array<PeripheralAgingState, kNumTiers> tier_aging_{};
  std::unordered_map<std::uint64_t, BitVec> content_;
  std::unordered_map<std::uint64_t, IntensityClass> true_class_;
  PredictorState predictor_;
  double background_energy_ = 0.0;
  std::uint64_t migrations_ = 0;
  bool failed_ = false;
};

inline StatsReport simulate_hybrid(const std::vector<MemoryRequest>& trace,
                                   const HybridSimConfig& cfg) {
  HybridEngine engine(cfg);
  return engine.simulate(trace);
}

}  // namespace pcmkit
