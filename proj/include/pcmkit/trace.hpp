#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcmkit/bitvec.hpp"
#include "pcmkit/errors.hpp"
#include "pcmkit/rng.hpp"

namespace pcmkit {

enum class RequestKind { Read, Write, Alloc };

/// One timestamped memory event. Payload is present only for writes,
/// site_id only for allocations.
struct MemoryRequest {
  std::uint64_t cycle = 0;
  RequestKind kind = RequestKind::Read;
  std::uint64_t address = 0;
  BitVec payload;
  std::uint64_t site_id = 0;

  bool operator==(const MemoryRequest&) const = default;
};

enum class AddressModelKind { Uniform, Zipf, HotCold };

struct AddressModel {
  AddressModelKind kind = AddressModelKind::Uniform;
  double zipf_s = 1.0;           // Zipf only
  double hot_fraction = 0.1;     // HotCold only
  double hot_access_share = 0.9; // HotCold only
};

/// Synthetic workload description. A trace is a pure function of this
/// struct: one xoshiro256** stream seeded from `seed`, draws consumed in a
/// fixed order per request (kind, address, payload bits).
struct TraceSpec {
  std::uint64_t n_requests = 1;
  double read_ratio = 0.0;
  double set_bit_density = 0.5;
  AddressModel address_model;
  std::uint64_t seed = 0;
  // Address-space shape; the spacing between distinct addresses defaults to
  // one line so generated traces cover line-granular simulators, and is set
  // to the page size for hybrid page workloads. The default stays inside
  // the PCM simulator's default logical space (4096 lines minus 2% spares).
  std::uint64_t n_addresses = 4000;
  std::uint64_t line_bytes = 64;
  std::uint64_t address_stride = 0;  // 0 -> line_bytes
  std::uint64_t cycle_stride = 1;
  bool emit_allocs = false;

  std::uint64_t stride() const { return address_stride == 0 ? line_bytes : address_stride; }
};

inline void validate(const TraceSpec& spec) {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(Errc::InvalidSpec, "trace spec: " + field + ": " + why);
  };
  if (spec.n_requests < 1) bad("n_requests", "must be >= 1");
  if (spec.read_ratio < 0.0 || spec.read_ratio > 1.0) bad("read_ratio", "must be in [0,1]");
  if (spec.set_bit_density < 0.0 || spec.set_bit_density > 1.0)
    bad("set_bit_density", "must be in [0,1]");
  if (spec.address_model.kind == AddressModelKind::Zipf && !(spec.address_model.zipf_s > 0.0))
    bad("address_model.s", "Zipf exponent must be > 0");
  if (spec.address_model.kind == AddressModelKind::HotCold) {
    if (spec.address_model.hot_fraction < 0.0 || spec.address_model.hot_fraction > 1.0)
      bad("address_model.hot_fraction", "must be in [0,1]");
    if (spec.address_model.hot_access_share < 0.0 || spec.address_model.hot_access_share > 1.0)
      bad("address_model.hot_access_share", "must be in [0,1]");
  }
  if (spec.n_addresses < 1) bad("n_addresses", "must be >= 1");
  if (spec.line_bytes < 1) bad("line_bytes", "must be >= 1");
  if (spec.cycle_stride < 1) bad("cycle_stride", "must be >= 1");
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::uint64_t parse_u64(const std::string& s, int base, std::uint64_t line_no,
                               const char* what) {
  std::string body = s;
  if (base == 16 && body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X'))
    body = body.substr(2);
  if (body.empty())
    throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": empty " + what,
                line_no);
  std::uint64_t value = 0;
  for (char c : body) {
    int digit;
    if (c >= '0' && c <= '9')
      digit = c - '0';
    else if (base == 16 && c >= 'a' && c <= 'f')
      digit = c - 'a' + 10;
    else if (base == 16 && c >= 'A' && c <= 'F')
      digit = c - 'A' + 10;
    else
      throw Error(Errc::MalformedLine,
                  "line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'", line_no);
    const std::uint64_t next = value * static_cast<std::uint64_t>(base) +
                               static_cast<std::uint64_t>(digit);
    if (next < value)
      throw Error(Errc::MalformedLine,
                  "line " + std::to_string(line_no) + ": " + what + " overflows 64 bits", line_no);
    value = next;
  }
  return value;
}

}  // namespace detail

/// Parses the line-oriented trace format:
///   <cycle> W <hex-address> <hex-payload>
///   <cycle> R <hex-address>
///   <cycle> A <hex-address> <site_id>
/// '#' starts a comment; blank lines are skipped. Cycles must be
/// nondecreasing in file order and every write payload must be exactly
/// line_bits wide.
inline std::vector<MemoryRequest> parse_trace(std::istream& in, std::uint64_t line_bits = 512) {
  std::vector<MemoryRequest> out;
  std::string line;
  std::uint64_t line_no = 0;
  bool have_prev = false;
  std::uint64_t prev_cycle = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto fields = detail::split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() < 3)
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": too few fields",
                  line_no);

    MemoryRequest req;
    req.cycle = detail::parse_u64(fields[0], 10, line_no, "cycle");
    req.address = detail::parse_u64(fields[2], 16, line_no, "address");

    const std::string& op = fields[1];
    if (op == "W") {
      if (fields.size() != 4)
        throw Error(Errc::MalformedLine,
                    "line " + std::to_string(line_no) + ": W expects 4 fields", line_no);
      if (fields[3].size() * 4 != line_bits)
        throw Error(Errc::BadPayloadWidth,
                    "line " + std::to_string(line_no) + ": payload is " +
                        std::to_string(fields[3].size() * 4) + " bits, expected " +
                        std::to_string(line_bits),
                    line_no);
      req.kind = RequestKind::Write;
      try {
        req.payload = BitVec::from_hex(fields[3]);
      } catch (const Error&) {
        throw Error(Errc::MalformedLine,
                    "line " + std::to_string(line_no) + ": bad payload hex", line_no);
      }
    } else if (op == "R") {
      if (fields.size() != 3)
        throw Error(Errc::MalformedLine,
                    "line " + std::to_string(line_no) + ": R expects 3 fields", line_no);
      req.kind = RequestKind::Read;
    } else if (op == "A") {
      if (fields.size() != 4)
        throw Error(Errc::MalformedLine,
                    "line " + std::to_string(line_no) + ": A expects 4 fields", line_no);
      req.kind = RequestKind::Alloc;
      req.site_id = detail::parse_u64(fields[3], 10, line_no, "site id");
    } else {
      throw Error(Errc::MalformedLine,
                  "line " + std::to_string(line_no) + ": unknown op '" + op + "'", line_no);
    }

    if (have_prev && req.cycle < prev_cycle)
      throw Error(Errc::NonMonotonicCycle,
                  "line " + std::to_string(line_no) + ": cycle " + std::to_string(req.cycle) +
                      " precedes " + std::to_string(prev_cycle),
                  line_no);
    prev_cycle = req.cycle;
    have_prev = true;
    out.push_back(std::move(req));
  }
  return out;
}

/// Canonical text form: lowercase hex, single spaces, one trailing newline
/// per record. parse(serialize(t)) == t for any valid trace.
inline void serialize_trace(const std::vector<MemoryRequest>& trace, std::ostream& out) {
  char addr[32];
  for (const auto& req : trace) {
    std::snprintf(addr, sizeof(addr), "0x%llx", static_cast<unsigned long long>(req.address));
    switch (req.kind) {
      case RequestKind::Write:
        out << req.cycle << " W " << addr << ' ' << req.payload.to_hex() << '\n';
        break;
      case RequestKind::Read:
        out << req.cycle << " R " << addr << '\n';
        break;
      case RequestKind::Alloc:
        out << req.cycle << " A " << addr << ' ' << req.site_id << '\n';
        break;
    }
  }
}

inline std::string serialize_trace(const std::vector<MemoryRequest>& trace) {
  std::ostringstream oss;
  serialize_trace(trace, oss);
  return oss.str();
}

namespace detail {

class AddressSampler {
 public:
  AddressSampler(const TraceSpec& spec) : spec_(spec) {
    if (spec.address_model.kind == AddressModelKind::Zipf) {
      cdf_.resize(spec.n_addresses);
      double acc = 0.0;
      for (std::uint64_t r = 0; r < spec.n_addresses; ++r) {
        acc += 1.0 / std::pow(static_cast<double>(r + 1), spec.address_model.zipf_s);
        cdf_[r] = acc;
      }
      for (auto& v : cdf_) v /= acc;
    } else if (spec.address_model.kind == AddressModelKind::HotCold) {
      hot_count_ = static_cast<std::uint64_t>(
          std::llround(spec.address_model.hot_fraction * static_cast<double>(spec.n_addresses)));
      if (hot_count_ == 0) hot_count_ = 1;
      if (hot_count_ > spec.n_addresses) hot_count_ = spec.n_addresses;
    }
  }

  /// Returns the sampled address index; hot pages are the low indices.
  std::uint64_t sample(Rng& rng) const {
    switch (spec_.address_model.kind) {
      case AddressModelKind::Uniform:
        return rng.below(spec_.n_addresses);
      case AddressModelKind::Zipf: {
        const double u = rng.uniform();
        std::size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
          const std::size_t mid = (lo + hi) / 2;
          if (cdf_[mid] < u)
            lo = mid + 1;
          else
            hi = mid;
        }
        return lo;
      }
      case AddressModelKind::HotCold: {
        const bool hot = rng.bernoulli(spec_.address_model.hot_access_share);
        if (hot || hot_count_ == spec_.n_addresses) return rng.below(hot_count_);
        return hot_count_ + rng.below(spec_.n_addresses - hot_count_);
      }
    }
    return 0;
  }

  bool is_hot(std::uint64_t index) const {
    return spec_.address_model.kind == AddressModelKind::HotCold && index < hot_count_;
  }

 private:
  const TraceSpec& spec_;
  std::vector<double> cdf_;
  std::uint64_t hot_count_ = 0;
};

}  // namespace detail

/// Deterministic trace synthesis. When emit_allocs is set, an Alloc record
/// is inserted before the first access to each 4 KiB page (site 1 for hot
/// pages under the HotCold model, site 0 otherwise).
inline std::vector<MemoryRequest> generate_trace(const TraceSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  detail::AddressSampler sampler(spec);
  const std::uint64_t line_bits = spec.line_bytes * 8;

  std::vector<MemoryRequest> out;
  out.reserve(spec.n_requests);
  std::unordered_set<std::uint64_t> touched_pages;

  for (std::uint64_t i = 0; i < spec.n_requests; ++i) {
    const std::uint64_t cycle = i * spec.cycle_stride;
    const bool is_read = rng.bernoulli(spec.read_ratio);
    const std::uint64_t index = sampler.sample(rng);
    const std::uint64_t address = index * spec.stride();

    if (spec.emit_allocs) {
      const std::uint64_t page = address / 4096;
      if (touched_pages.insert(page).second) {
        MemoryRequest alloc;
        alloc.cycle = cycle;
        alloc.kind = RequestKind::Alloc;
        alloc.address = page * 4096;
        alloc.site_id = sampler.is_hot(index) ? 1 : 0;
        out.push_back(alloc);
      }
    }

    MemoryRequest req;
    req.cycle = cycle;
    req.address = address;
    if (is_read) {
      req.kind = RequestKind::Read;
    } else {
      req.kind = RequestKind::Write;
      BitVec payload(line_bits);
      for (std::uint64_t b = 0; b < line_bits; ++b)
        if (rng.bernoulli(spec.set_bit_density)) payload.set(b, true);
      req.payload = std::move(payload);
    }
    out.push_back(std::move(req));
  }
  return out;
}

}  // namespace pcmkit
