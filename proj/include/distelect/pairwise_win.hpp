// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "distelect/share_distribution.hpp"

namespace distelect {

/// The two candidates' share distributions for one state and year.
/// Each distribution's opponent must be the other's candidate.
class StateRace {
 public:
  StateRace(ShareDistribution c1, ShareDistribution c2) : c1_(std::move(c1)), c2_(std::move(c2)) {
    const auto& a = c1_.meta();
    const auto& b = c2_.meta();
    if (a.state != b.state)
      throw Error(ErrorCode::InvalidRace, "race mixes states '" + a.state + "' and '" + b.state + "'");
    if (a.year != b.year)
      throw Error(ErrorCode::InvalidRace, "race in " + a.state + " mixes years " +
                                              std::to_string(a.year) + " and " +
                                              std::to_string(b.year));
    if (a.candidate != b.opponent || b.candidate != a.opponent)
      throw Error(ErrorCode::InvalidRace, "race in " + a.state + ": '" + a.candidate + "' vs '" +
                                              a.opponent + "' does not mirror '" + b.candidate +
                                              "' vs '" + b.opponent + "'");
  }

  const ShareDistribution& c1() const noexcept { return c1_; }
  const ShareDistribution& c2() const noexcept { return c2_; }
  const std::string& state() const noexcept { return c1_.meta().state; }
  int year() const noexcept { return c1_.meta().year; }

  StateRace swapped() const { return StateRace(c2_, c1_); }

 private:
  ShareDistribution c1_;
  ShareDistribution c2_;
};

/// Win probabilities conditioned on the two integer shares differing.
/// The raw (unconditioned) components are kept alongside.
struct WinProbabilities {
  double p_c1_wins = 0.0;
  double p_c2_wins = 0.0;
  double raw_c1 = 0.0;
  double raw_c2 = 0.0;
  double raw_tie_mass = 0.0;
};

namespace detail {

// Σ_{y1} P_a(y1) · Σ_{y2<y1} P_b(y2)
inline double raw_win_mass(const ShareDistribution& a, const ShareDistribution& b) noexcept {
  DenseMasses below{};
  double running = 0.0;
  const DenseMasses pb = b.dense();
  for (int y = 0; y < kShareCount; ++y) {
    below[y] = running;
    running += pb[y];
  }
  double sum = 0.0;
  for (const auto& [share, mass] : a.masses()) sum += mass * below[share - kMinShare];
  return sum;
}

}  // namespace detail

inline double tie_probability(const StateRace& race) noexcept {
  double sum = 0.0;
  for (const auto& [share, mass] : race.c1().masses()) sum += mass * race.c2().at(share);
  return sum;
}

inline WinProbabilities win_probability(const StateRace& race) {
  WinProbabilities out;
  out.raw_c1 = detail::raw_win_mass(race.c1(), race.c2());
  out.raw_c2 = detail::raw_win_mass(race.c2(), race.c1());
  out.raw_tie_mass = tie_probability(race);
  const double decided = out.raw_c1 + out.raw_c2;
  if (decided == 0.0)
    throw Error(ErrorCode::AllTies,
                "every outcome in " + race.state() + " is a tie; win probability is undefined",
                {race.state()});
  out.p_c1_wins = out.raw_c1 / decided;
  out.p_c2_wins = out.raw_c2 / decided;
  return out;
}

}  // namespace distelect
