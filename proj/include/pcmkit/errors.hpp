#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcmkit {

/// Every failure the toolkit can report, one enumerator per condition.
enum class Errc {
  // configuration
  InvalidSpec,
  ConfigInvalid,
  NonPositiveVoltage,
  LengthMismatch,
  // input
  Io,
  MalformedLine,
  NonMonotonicCycle,
  BadPayloadWidth,
  DanglingSynapse,
  NegativeSpikeCount,
  DuplicateNeuron,
  UnallocatedAccess,
  AddressOutOfRange,
  MismatchedTrace,
  // infeasible / device failure
  OutOfSpareLines,
  OutOfMemory,
  Infeasible,
  TooLarge,
  DeviceFailed,
};

/// Coarse grouping used to pick a CLI exit code.
enum class ErrCategory { Config = 2, Input = 3, Infeasible = 4 };

constexpr ErrCategory category_of(Errc c) {
  switch (c) {
    case Errc::InvalidSpec:
    case Errc::ConfigInvalid:
    case Errc::NonPositiveVoltage:
    case Errc::LengthMismatch:
      return ErrCategory::Config;
    case Errc::Io:
    case Errc::MalformedLine:
    case Errc::NonMonotonicCycle:
    case Errc::BadPayloadWidth:
    case Errc::DanglingSynapse:
    case Errc::NegativeSpikeCount:
    case Errc::DuplicateNeuron:
    case Errc::UnallocatedAccess:
    case Errc::AddressOutOfRange:
    case Errc::MismatchedTrace:
      return ErrCategory::Input;
    default:
      return ErrCategory::Infeasible;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg, std::uint64_t line_no = 0)
      : std::runtime_error(std::move(msg)), code_(code), line_no_(line_no) {}

  Errc code() const noexcept { return code_; }
  ErrCategory category() const noexcept { return category_of(code_); }
  /// 1-based line number for parse errors, 0 when not applicable.
  std::uint64_t line_no() const noexcept { return line_no_; }

 private:
  Errc code_;
  std::uint64_t line_no_;
};

}  // namespace pcmkit
