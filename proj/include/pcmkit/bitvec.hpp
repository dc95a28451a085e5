#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcmkit/errors.hpp"

namespace pcmkit {

/// Fixed-width bit vector backing memory-line payloads. Bit i of word w is
/// payload bit w*64+i; hex serialization is big-endian nibble order so the
/// text form reads like a hex dump of the line.
class BitVec {
 public:
  BitVec() = default;

  explicit BitVec(std::size_t n_bits, bool value = false)
      : n_bits_(n_bits), words_((n_bits + 63) / 64, value ? ~0ULL : 0ULL) {
    trim();
  }

  static BitVec zeros(std::size_t n_bits) { return BitVec(n_bits, false); }
  static BitVec ones(std::size_t n_bits) { return BitVec(n_bits, true); }

  std::size_t size() const { return n_bits_; }
  bool empty() const { return n_bits_ == 0; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1ULL; }

  void set(std::size_t i, bool v) {
    const std::uint64_t mask = 1ULL << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  std::size_t popcount() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// Bits that are 0 here and 1 in `to` (SET transitions for PCM).
  std::size_t count_rises(const BitVec& to) const {
    require_same_size(to);
    std::size_t n = 0;
    for (std::size_t w = 0; w < words_.size(); ++w)
      n += static_cast<std::size_t>(std::popcount(~words_[w] & to.words_[w]));
    return n;
  }

  /// Bits that are 1 here and 0 in `to` (RESET transitions for PCM).
  std::size_t count_falls(const BitVec& to) const {
    require_same_size(to);
    std::size_t n = 0;
    for (std::size_t w = 0; w < words_.size(); ++w)
      n += static_cast<std::size_t>(std::popcount(words_[w] & ~to.words_[w]));
    return n;
  }

  bool operator==(const BitVec& other) const = default;

  /// Parses 2*n_bytes hex digits into an 8*n_bytes-bit vector. The first hex
  /// digit holds the most significant nibble of bit positions [n-4, n).
  static BitVec from_hex(const std::string& hex) {
    BitVec out(hex.size() * 4);
    for (std::size_t i = 0; i < hex.size(); ++i) {
      const int nib = hex_nibble(hex[i]);
      if (nib < 0) throw Error(Errc::MalformedLine, "invalid hex digit in payload");
      const std::size_t base = (hex.size() - 1 - i) * 4;
      for (int b = 0; b < 4; ++b) out.set(base + b, (nib >> b) & 1);
    }
    return out;
  }

  std::string to_hex() const {
    std::string out((n_bits_ + 3) / 4, '0');
    static const char digits[] = "0123456789abcdef";
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t base = (out.size() - 1 - i) * 4;
      int nib = 0;
      for (int b = 0; b < 4 && base + b < n_bits_; ++b)
        nib |= static_cast<int>(get(base + b)) << b;
      out[i] = digits[nib];
    }
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

 private:
  void require_same_size(const BitVec& other) const {
    if (n_bits_ != other.n_bits_)
      throw Error(Errc::LengthMismatch, "bit vector length mismatch");
  }

  // Keep bits past n_bits_ zero so equality and popcount stay exact.
  void trim() {
    if (n_bits_ % 64 != 0 && !words_.empty())
      words_.back() &= (1ULL << (n_bits_ % 64)) - 1;
  }

  static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  std::size_t n_bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace pcmkit
