// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "distelect/io.hpp"
#include "distelect/share_distribution.hpp"

namespace distelect {

struct TokenProbability {
  std::string token;
  double probability = 0.0;

  bool operator==(const TokenProbability&) const = default;
};

/// Top-k alternatives for the first generated token. Mass outside the top k
/// is not listed, so probabilities may sum to less than 1.
struct RawTokenDistribution {
  std::vector<TokenProbability> entries;
  std::string model;
  std::chrono::system_clock::time_point retrieved_at{};
};

inline constexpr double kRawSumTolerance = 1e-6;

inline void validate_raw(const RawTokenDistribution& raw) {
  double sum = 0.0;
  for (const auto& e : raw.entries) {
    if (!(e.probability >= 0.0 && e.probability <= 1.0))
      throw Error(ErrorCode::MalformedResponse,
                  "token '" + e.token + "' has probability " + std::to_string(e.probability));
    sum += e.probability;
  }
  if (sum > 1.0 + kRawSumTolerance)
    throw Error(ErrorCode::MalformedResponse,
                "token probabilities sum to " + std::to_string(sum) + ", more than 1");
}

/// The share a token names, if it is nothing but an integer 0..100 once
/// surrounding whitespace is removed. Signs and other characters disqualify it.
inline std::optional<Share> parse_share_token(std::string_view token) {
  auto t = io::trim(token);
  if (t.empty() || t.size() > 8) return std::nullopt;
  int value = 0;
  for (char c : t) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  if (!is_valid_share(value)) return std::nullopt;
  return value;
}

/// Converts top-k token probabilities into a share distribution.
///
/// conforming_mass is the absolute probability of conforming tokens, so mass
/// lost to top-k truncation counts as nonconforming. Spellings of the same
/// integer (" 47", "47") merge. Per-share contributions are summed in sorted
/// order so entry order cannot change the result.
inline ShareDistribution tokens_to_shares(const RawTokenDistribution& raw, CellMeta meta) {
  validate_raw(raw);
  std::map<Share, std::vector<double>> parts;
  for (const auto& e : raw.entries)
    if (auto share = parse_share_token(e.token)) parts[*share].push_back(e.probability);

  ShareDistribution::MassMap masses;
  double conforming = 0.0;
  for (auto& [share, ps] : parts) {
    std::sort(ps.begin(), ps.end());
    double sum = 0.0;
    for (double p : ps) sum += p;
    masses[share] = sum;
    conforming += sum;
  }
  if (!(conforming > 0.0))
    throw Error(ErrorCode::NoConformingTokens,
                "no token names an integer share 0..100 for " + meta.candidate + " in " + meta.state,
                {meta.candidate});
  return make_distribution(masses, std::min(conforming, 1.0), std::move(meta));
}

}  // namespace distelect
