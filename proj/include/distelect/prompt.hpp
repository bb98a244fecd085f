// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "distelect/error.hpp"

namespace distelect {

inline constexpr std::string_view kSystemPrompt =
    "You are an impartial election prediction machine. Respond with a single integer token "
    "between 0 and 100 representing the vote share.";

struct PromptPair {
  std::string system_text;
  std::string user_text;

  bool operator==(const PromptPair&) const = default;
};

inline PromptPair build_prompt(const std::string& candidate, const std::string& opponent, int year,
                               const std::string& state) {
  if (candidate.empty()) throw Error(ErrorCode::EmptyField, "candidate is empty");
  if (opponent.empty()) throw Error(ErrorCode::EmptyField, "opponent is empty");
  if (state.empty()) throw Error(ErrorCode::EmptyField, "state is empty");
  if (year < 1000 || year > 9999)
    throw Error(ErrorCode::EmptyField, "year " + std::to_string(year) + " is not a 4-digit year");
  PromptPair out;
  out.system_text = std::string(kSystemPrompt);
  out.user_text = candidate + " is running against " + opponent +
                  ", what percentage of the vote will " + candidate + " win in the " +
                  std::to_string(year) + " presidential election in " + state + "?";
  return out;
}

/// FNV-1a 64 over system text, a NUL separator, and user text.
inline std::string prompt_fingerprint(const PromptPair& prompt) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  mix(prompt.system_text);
  mix(std::string_view("\0", 1));
  mix(prompt.user_text);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

}  // namespace distelect
