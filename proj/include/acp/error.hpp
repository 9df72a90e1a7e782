#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace acp {

enum class ErrorKind {
  parse,
  invalid_argument,
  missing_row,
  duplicate_row,
  non_positive_potential,
  mixed_ranges,
  inconsistent_members,
  name_collision,
  arity_cap_exceeded,
  fragment_violation,
  no_bijection,
  not_commutative,
  inconsistent_grouping,
  unknown_randvar,
  evidence_on_target,
  non_positive_gain,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "Parse";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::missing_row: return "MissingRow";
    case ErrorKind::duplicate_row: return "DuplicateRow";
    case ErrorKind::non_positive_potential: return "NonPositivePotential";
    case ErrorKind::mixed_ranges: return "MixedRanges";
    case ErrorKind::inconsistent_members: return "InconsistentMembers";
    case ErrorKind::name_collision: return "NameCollision";
    case ErrorKind::arity_cap_exceeded: return "ArityCapExceeded";
    case ErrorKind::fragment_violation: return "FragmentViolation";
    case ErrorKind::no_bijection: return "NoBijection";
    case ErrorKind::not_commutative: return "NotCommutative";
    case ErrorKind::inconsistent_grouping: return "InconsistentGrouping";
    case ErrorKind::unknown_randvar: return "UnknownRandVar";
    case ErrorKind::evidence_on_target: return "EvidenceOnTarget";
    case ErrorKind::non_positive_gain: return "NonPositiveGain";
  }
  return "Unknown";
}

/// All library failures are reported through this type; `kind()` names the
/// violated contract so callers (and the CLI's exit codes) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace acp
