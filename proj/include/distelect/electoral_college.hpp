// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file electoral_college.hpp
 * @brief Exact distribution of a candidate's Electoral College total.
 *
 * States are independent winner-take-all Bernoulli trials. The total is the
 * coefficient vector of
 *
 *     G(z) = prod_s [ (1 - p_s) + p_s * z^{e_s} ]
 *
 * expanded by dense in-place polynomial multiplication, O(|S| * E).
 * `brute_force_ec` enumerates every subset of states instead and exists to
 * check the product on small instances.
 */

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "distelect/error.hpp"
#include "distelect/io.hpp"

namespace distelect {

class EVAllocation {
 public:
  EVAllocation() = default;

  explicit EVAllocation(std::map<std::string, int> votes) : votes_(std::move(votes)) {
    for (const auto& [state, ev] : votes_) {
      if (state.empty()) throw Error(ErrorCode::SchemaError, "allocation has an unnamed state");
      if (ev < 1)
        throw Error(ErrorCode::SchemaError,
                    state + " has " + std::to_string(ev) + " electoral votes; need at least 1");
      total_ += ev;
    }
  }

  const std::map<std::string, int>& votes() const noexcept { return votes_; }
  int total() const noexcept { return total_; }
  std::size_t size() const noexcept { return votes_.size(); }
  bool contains(const std::string& state) const { return votes_.count(state) != 0; }

  int at(const std::string& state) const {
    auto it = votes_.find(state);
    if (it == votes_.end()) throw Error(ErrorCode::StateMismatch, state + " is not in the allocation", {state});
    return it->second;
  }

  std::vector<std::string> states() const {
    std::vector<std::string> out;
    out.reserve(votes_.size());
    for (const auto& kv : votes_) out.push_back(kv.first);
    return out;
  }

  /// Smallest total that is a strict majority: 270 of 538.
  int majority() const noexcept { return total_ / 2 + 1; }

  bool operator==(const EVAllocation&) const = default;

 private:
  std::map<std::string, int> votes_;
  int total_ = 0;
};

/// 2024 and 2028 apportionment (2020 census), 50 states plus DC.
inline const EVAllocation& allocation_2024() {
  static const EVAllocation alloc(std::map<std::string, int>{
      {"Alabama", 9},        {"Alaska", 3},          {"Arizona", 11},
      {"Arkansas", 6},       {"California", 54},     {"Colorado", 10},
      {"Connecticut", 7},    {"Delaware", 3},        {"District of Columbia", 3},
      {"Florida", 30},       {"Georgia", 16},        {"Hawaii", 4},
      {"Idaho", 4},          {"Illinois", 19},       {"Indiana", 11},
      {"Iowa", 6},           {"Kansas", 6},          {"Kentucky", 8},
      {"Louisiana", 8},      {"Maine", 4},           {"Maryland", 10},
      {"Massachusetts", 11}, {"Michigan", 15},       {"Minnesota", 10},
      {"Mississippi", 6},    {"Missouri", 10},       {"Montana", 4},
      {"Nebraska", 5},       {"Nevada", 6},          {"New Hampshire", 4},
      {"New Jersey", 14},    {"New Mexico", 5},      {"New York", 28},
      {"North Carolina", 16},{"North Dakota", 3},    {"Ohio", 17},
      {"Oklahoma", 7},       {"Oregon", 8},          {"Pennsylvania", 19},
      {"Rhode Island", 4},   {"South Carolina", 9},  {"South Dakota", 3},
      {"Tennessee", 11},     {"Texas", 40},          {"Utah", 6},
      {"Vermont", 3},        {"Virginia", 13},       {"Washington", 12},
      {"West Virginia", 4},  {"Wisconsin", 10},      {"Wyoming", 3},
  });
  return alloc;
}

/// 2012 through 2020 apportionment (2010 census).
inline const EVAllocation& allocation_2012() {
  static const EVAllocation alloc(std::map<std::string, int>{
      {"Alabama", 9},        {"Alaska", 3},          {"Arizona", 11},
      {"Arkansas", 6},       {"California", 55},     {"Colorado", 9},
      {"Connecticut", 7},    {"Delaware", 3},        {"District of Columbia", 3},
      {"Florida", 29},       {"Georgia", 16},        {"Hawaii", 4},
      {"Idaho", 4},          {"Illinois", 20},       {"Indiana", 11},
      {"Iowa", 6},           {"Kansas", 6},          {"Kentucky", 8},
      {"Louisiana", 8},      {"Maine", 4},           {"Maryland", 10},
      {"Massachusetts", 11}, {"Michigan", 16},       {"Minnesota", 10},
      {"Mississippi", 6},    {"Missouri", 10},       {"Montana", 3},
      {"Nebraska", 5},       {"Nevada", 6},          {"New Hampshire", 4},
      {"New Jersey", 14},    {"New Mexico", 5},      {"New York", 29},
      {"North Carolina", 15},{"North Dakota", 3},    {"Ohio", 18},
      {"Oklahoma", 7},       {"Oregon", 7},          {"Pennsylvania", 20},
      {"Rhode Island", 4},   {"South Carolina", 9},  {"South Dakota", 3},
      {"Tennessee", 11},     {"Texas", 38},          {"Utah", 6},
      {"Vermont", 3},        {"Virginia", 13},       {"Washington", 12},
      {"West Virginia", 5},  {"Wisconsin", 10},      {"Wyoming", 3},
  });
  return alloc;
}

/// Apportionment in force for a presidential election year. Years before
/// 2012 fall back to the 2012 table.
inline const EVAllocation& allocation_for_year(int year) {
  return year >= 2024 ? allocation_2024() : allocation_2012();
}

inline std::string allocation_to_csv(const EVAllocation& alloc) {
  std::string out = "state,electoral_votes\n";
  for (const auto& [state, ev] : alloc.votes())
    out += io::csv_field(state) + "," + std::to_string(ev) + "\n";
  return out;
}

inline EVAllocation parse_allocation_csv(std::string_view text, const std::string& source = "allocation") {
  auto table = io::parse_csv(text, {"state", "electoral_votes"}, source);
  std::map<std::string, int> votes;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto where = source + " line " + std::to_string(table.line_numbers[i]);
    int ev = io::parse_number<int>(row[1], where);
    if (!votes.emplace(row[0], ev).second)
      throw Error(ErrorCode::SchemaError, where + ": duplicate state '" + row[0] + "'");
  }
  if (votes.empty()) throw Error(ErrorCode::SchemaError, source + ": no states");
  return EVAllocation(std::move(votes));
}

inline EVAllocation load_allocation(const std::filesystem::path& path) {
  return parse_allocation_csv(io::read_file(path), path.string());
}

/// PMF over the number of electoral votes won by the first candidate.
struct ECDistribution {
  std::vector<double> pmf;  // size e_total + 1
  int e_total = 0;
};

using StateWins = std::map<std::string, double>;

namespace detail {

inline void check_state_wins(const StateWins& state_wins, const EVAllocation& alloc) {
  std::vector<std::string> missing;
  for (const auto& [state, ev] : alloc.votes())
    if (!state_wins.count(state)) missing.push_back(state);
  std::vector<std::string> extra;
  for (const auto& [state, p] : state_wins)
    if (!alloc.contains(state)) extra.push_back(state);
  if (!missing.empty() || !extra.empty()) {
    std::string msg;
    if (!missing.empty()) msg += "no win probability for: " + join(missing);
    if (!extra.empty()) msg += std::string(msg.empty() ? "" : "; ") + "not in allocation: " + join(extra);
    missing.insert(missing.end(), extra.begin(), extra.end());
    throw Error(ErrorCode::StateMismatch, msg, std::move(missing));
  }
  for (const auto& [state, p] : state_wins)
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorCode::ProbabilityOutOfRange,
                  state + " win probability " + std::to_string(p) + " is outside [0,1]", {state});
}

}  // namespace detail

/// States are multiplied in descending electoral-vote order (ties by name)
/// so the output does not depend on map iteration details.
inline ECDistribution ec_distribution(const StateWins& state_wins, const EVAllocation& alloc) {
  detail::check_state_wins(state_wins, alloc);
  std::vector<std::pair<std::string, int>> order(alloc.votes().begin(), alloc.votes().end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  ECDistribution out;
  out.e_total = alloc.total();
  out.pmf.assign(static_cast<std::size_t>(out.e_total) + 1, 0.0);
  out.pmf[0] = 1.0;
  int reach = 0;
  for (const auto& [state, ev] : order) {
    const double p = state_wins.at(state);
    const double q = 1.0 - p;
    reach += ev;
    // new[k] = q * old[k] + p * old[k - ev]; descending k reads only old values.
    for (int k = reach; k >= 0; --k) {
      double v = q * out.pmf[k];
      if (k >= ev) v += p * out.pmf[k - ev];
      out.pmf[k] = v;
    }
  }
  return out;
}

inline constexpr std::size_t kBruteForceStateLimit = 20;

/// Sums the probability of every subset of states the candidate could win.
inline ECDistribution brute_force_ec(const StateWins& state_wins, const EVAllocation& alloc) {
  if (alloc.size() > kBruteForceStateLimit)
    throw Error(ErrorCode::TooManyStates, std::to_string(alloc.size()) +
                                              " states exceeds the enumeration limit of " +
                                              std::to_string(kBruteForceStateLimit));
  detail::check_state_wins(state_wins, alloc);
  std::vector<int> ev;
  std::vector<double> p;
  for (const auto& [state, votes] : alloc.votes()) {
    ev.push_back(votes);
    p.push_back(state_wins.at(state));
  }
  ECDistribution out;
  out.e_total = alloc.total();
  out.pmf.assign(static_cast<std::size_t>(out.e_total) + 1, 0.0);
  const std::uint32_t n = static_cast<std::uint32_t>(ev.size());
  for (std::uint32_t subset = 0; subset < (1u << n); ++subset) {
    double prob = 1.0;
    int votes = 0;
    for (std::uint32_t s = 0; s < n; ++s) {
      if (subset & (1u << s)) {
        prob *= p[s];
        votes += ev[s];
      } else {
        prob *= 1.0 - p[s];
      }
    }
    out.pmf[votes] += prob;
  }
  return out;
}

/// P(total >= threshold).
inline double win_chance(const ECDistribution& dist, int threshold) {
  if (threshold < 0 || threshold > dist.e_total + 1)
    throw Error(ErrorCode::ThresholdOutOfRange,
                "threshold " + std::to_string(threshold) + " is outside 0.." +
                    std::to_string(dist.e_total + 1));
  double sum = 0.0;
  for (int k = threshold; k <= dist.e_total; ++k) sum += dist.pmf[k];
  return sum;
}

/// P(opponent total >= threshold), i.e. P(total <= E - threshold).
inline double loss_chance(const ECDistribution& dist, int threshold) {
  if (threshold < 0 || threshold > dist.e_total + 1)
    throw Error(ErrorCode::ThresholdOutOfRange,
                "threshold " + std::to_string(threshold) + " is outside 0.." +
                    std::to_string(dist.e_total + 1));
  double sum = 0.0;
  for (int k = 0; k <= dist.e_total - threshold; ++k) sum += dist.pmf[k];
  return sum;
}

/// P(exactly E/2 each).
inline double exact_tie_probability(const ECDistribution& dist) {
  if (dist.e_total % 2 != 0)
    throw Error(ErrorCode::OddTotal, "total of " + std::to_string(dist.e_total) +
                                         " electoral votes cannot split evenly");
  return dist.pmf[dist.e_total / 2];
}

inline double expected_votes(const ECDistribution& dist) noexcept {
  double sum = 0.0;
  for (int k = 1; k <= dist.e_total; ++k) sum += k * dist.pmf[k];
  return sum;
}

/// The same outcomes seen from the opponent's side: pmf'[k] = pmf[E - k].
inline ECDistribution mirrored(const ECDistribution& dist) {
  ECDistribution out = dist;
  std::reverse(out.pmf.begin(), out.pmf.end());
  return out;
}

inline std::string pmf_to_csv(const ECDistribution& dist) {
  std::string out = "k,probability\n";
  for (int k = 0; k <= dist.e_total; ++k)
    out += std::to_string(k) + "," + io::format_number(dist.pmf[k]) + "\n";
  return out;
}

}  // namespace distelect
