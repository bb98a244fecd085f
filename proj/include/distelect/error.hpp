// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace distelect {

enum class ErrorCode {
  EmptyDistribution,
  ShareOutOfRange,
  NegativeMass,
  InvalidMeta,
  InvalidRace,
  AllTies,
  StateMismatch,
  ProbabilityOutOfRange,
  TooManyStates,
  ThresholdOutOfRange,
  OddTotal,
  EmptyField,
  InvalidConfig,
  NetworkError,
  MalformedResponse,
  AuthError,
  NoConformingTokens,
  IoError,
  SchemaError,
  MissingCell,
  ExactMeanTie,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::ShareOutOfRange: return "ShareOutOfRange";
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::InvalidMeta: return "InvalidMeta";
    case ErrorCode::InvalidRace: return "InvalidRace";
    case ErrorCode::AllTies: return "AllTies";
    case ErrorCode::StateMismatch: return "StateMismatch";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::TooManyStates: return "TooManyStates";
    case ErrorCode::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorCode::OddTotal: return "OddTotal";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::NoConformingTokens: return "NoConformingTokens";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::ExactMeanTie: return "ExactMeanTie";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this exception.
///
/// `subjects` names the entities the failure is about (tied states, missing
/// states, the candidate whose fetch failed) so callers can report them
/// without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> subjects = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        subjects_(std::move(subjects)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& subjects() const noexcept { return subjects_; }

 private:
  ErrorCode code_;
  std::vector<std::string> subjects_;
};

namespace detail {

inline std::string join(const std::vector<std::string>& items,
                        std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace detail
}  // namespace distelect
