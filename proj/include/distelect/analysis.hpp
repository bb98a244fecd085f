// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file analysis.hpp
 * @brief Experiment pipeline over stored cells: error tables against ground
 *        truth, average-case maps, swing-state bias and matchup grids.
 */

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "distelect/cell_store.hpp"
#include "distelect/electoral_college.hpp"
#include "distelect/endpoint.hpp"
#include "distelect/io.hpp"
#include "distelect/pairwise_win.hpp"

namespace distelect {

/// Actual vote shares for one election. Every state lists the same two
/// candidates; `candidates[0]` is the one reported first.
struct GroundTruth {
  int year = 0;
  std::vector<std::string> candidates;
  std::map<std::pair<std::string, std::string>, double> records;  // (state, candidate) -> share

  std::vector<std::string> states() const {
    std::set<std::string> s;
    for (const auto& [key, share] : records) s.insert(key.first);
    return {s.begin(), s.end()};
  }

  double share(const std::string& state, const std::string& candidate) const {
    auto it = records.find({state, candidate});
    if (it == records.end())
      throw Error(ErrorCode::MissingCell, "no ground truth for " + candidate + " in " + state, {state});
    return it->second;
  }
};

inline GroundTruth parse_ground_truth_csv(std::string_view text, int year,
                                          const std::string& source = "ground truth") {
  auto table = io::parse_csv(text, {"state", "candidate", "share_percent"}, source);
  GroundTruth truth;
  truth.year = year;
  std::map<std::string, std::vector<std::string>> per_state;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto where = source + " line " + std::to_string(table.line_numbers[i]);
    if (row[0].empty() || row[1].empty())
      throw Error(ErrorCode::SchemaError, where + ": empty state or candidate");
    double share = io::parse_number<double>(row[2], where);
    if (!(share >= 0.0 && share <= 100.0))
      throw Error(ErrorCode::SchemaError, where + ": share " + row[2] + " is outside [0,100]");
    if (!truth.records.emplace(std::make_pair(row[0], row[1]), share).second)
      throw Error(ErrorCode::SchemaError, where + ": duplicate entry for " + row[1] + " in " + row[0]);
    if (std::find(truth.candidates.begin(), truth.candidates.end(), row[1]) == truth.candidates.end())
      truth.candidates.push_back(row[1]);
    per_state[row[0]].push_back(row[1]);
  }
  if (truth.candidates.size() != 2)
    throw Error(ErrorCode::SchemaError, source + ": expected exactly two candidates, found " +
                                            std::to_string(truth.candidates.size()));
  for (const auto& [state, cands] : per_state)
    if (cands.size() != 2)
      throw Error(ErrorCode::SchemaError, source + ": " + state + " has " +
                                              std::to_string(cands.size()) + " entries; need 2", {state});
  return truth;
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path, int year) {
  return parse_ground_truth_csv(io::read_file(path), year, path.string());
}

namespace detail {

/// The cells for `truth`'s year and candidate pair, keyed by (state, candidate).
/// Every truth record needs a cell and every such cell needs a truth record.
inline std::map<std::pair<std::string, std::string>, const ShareDistribution*> match_cells(
    const std::vector<ShareDistribution>& cells, const GroundTruth& truth) {
  const auto& a = truth.candidates.at(0);
  const auto& b = truth.candidates.at(1);
  std::map<std::pair<std::string, std::string>, const ShareDistribution*> found;
  std::vector<std::string> orphans;
  for (const auto& cell : cells) {
    const auto& m = cell.meta();
    if (m.year != truth.year) continue;
    if (!((m.candidate == a && m.opponent == b) || (m.candidate == b && m.opponent == a))) continue;
    if (!found.emplace(std::make_pair(m.state, m.candidate), &cell).second)
      throw Error(ErrorCode::SchemaError,
                  "duplicate cell for " + m.candidate + " in " + m.state, {m.state});
    if (!truth.records.count({m.state, m.candidate})) orphans.push_back(m.state);
  }
  std::vector<std::string> gaps;
  std::string msg;
  for (const auto& [key, share] : truth.records) {
    if (!found.count(key)) {
      gaps.push_back(key.first);
      msg += "\n  no cell for " + key.second + " in " + key.first;
    }
  }
  for (const auto& s : orphans) {
    gaps.push_back(s);
    msg += "\n  no ground truth for cell in " + s;
  }
  if (!gaps.empty())
    throw Error(ErrorCode::MissingCell, "cells and ground truth do not match:" + msg, std::move(gaps));
  return found;
}

}  // namespace detail

enum class StdDevForm { Sample, Population };

struct StateError {
  double predicted_c1 = 0.0;
  double actual_c1 = 0.0;
  double error_c1 = 0.0;
  double predicted_c2 = 0.0;
  double actual_c2 = 0.0;
  double error_c2 = 0.0;
};

struct ErrorReport {
  std::string c1;
  std::string c2;
  int year = 0;
  StdDevForm stddev_form = StdDevForm::Sample;
  std::map<std::string, StateError> per_state;
  double mean_c1 = 0.0;
  double mean_c2 = 0.0;
  double stddev_c1 = 0.0;
  double stddev_c2 = 0.0;
};

/// Mean and standard deviation, accumulated in the order given. The sample
/// form divides by N-1 and is 0 for fewer than two values.
inline std::pair<double, double> mean_and_stddev(const std::vector<double>& xs, StdDevForm form) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double denom = static_cast<double>(xs.size());
  if (form == StdDevForm::Sample) {
    if (xs.size() < 2) return {mean, 0.0};
    denom -= 1.0;
  }
  return {mean, std::sqrt(ss / denom)};
}

/// Absolute error between each cell's weighted mean and the actual share.
/// States aggregate in name order, so input order does not affect the result.
inline ErrorReport error_table(const std::vector<ShareDistribution>& cells, const GroundTruth& truth,
                               StdDevForm form = StdDevForm::Sample) {
  auto found = detail::match_cells(cells, truth);
  ErrorReport report;
  report.c1 = truth.candidates.at(0);
  report.c2 = truth.candidates.at(1);
  report.year = truth.year;
  report.stddev_form = form;
  std::vector<double> e1;
  std::vector<double> e2;
  for (const auto& state : truth.states()) {
    StateError row;
    row.predicted_c1 = weighted_mean(*found.at({state, report.c1}));
    row.actual_c1 = truth.share(state, report.c1);
    row.error_c1 = std::abs(row.predicted_c1 - row.actual_c1);
    row.predicted_c2 = weighted_mean(*found.at({state, report.c2}));
    row.actual_c2 = truth.share(state, report.c2);
    row.error_c2 = std::abs(row.predicted_c2 - row.actual_c2);
    e1.push_back(row.error_c1);
    e2.push_back(row.error_c2);
    report.per_state.emplace(state, row);
  }
  std::tie(report.mean_c1, report.stddev_c1) = mean_and_stddev(e1, form);
  std::tie(report.mean_c2, report.stddev_c2) = mean_and_stddev(e2, form);
  return report;
}

/// Per state, the candidate whose distribution has the strictly larger mean.
inline std::map<std::string, std::string> average_case_map(
    const std::map<std::string, StateRace>& races) {
  std::map<std::string, std::string> winners;
  std::vector<std::string> tied;
  for (const auto& [state, race] : races) {
    const double m1 = weighted_mean(race.c1());
    const double m2 = weighted_mean(race.c2());
    if (m1 > m2)
      winners.emplace(state, race.c1().meta().candidate);
    else if (m2 > m1)
      winners.emplace(state, race.c2().meta().candidate);
    else
      tied.push_back(state);
  }
  if (!tied.empty())
    throw Error(ErrorCode::ExactMeanTie, "equal mean shares in: " + detail::join(tied), tied);
  return winners;
}

/// Electoral votes per candidate for a winner assignment.
inline std::map<std::string, int> tally_votes(const std::map<std::string, std::string>& winners,
                                              const EVAllocation& alloc) {
  std::map<std::string, int> out;
  for (const auto& [state, winner] : winners) out[winner] += alloc.at(state);
  return out;
}

struct SwingGroup {
  std::vector<std::string> states;
  std::optional<double> mean_signed_error_c1;  // empty when the group is empty
  std::optional<double> mean_signed_error_c2;
};

struct SwingBiasReport {
  std::string c1;
  std::string c2;
  int year = 0;
  double margin_threshold = 5.0;
  SwingGroup swing;
  SwingGroup safe;
  double overall_signed_error_c1 = 0.0;
  double overall_signed_error_c2 = 0.0;
};

inline constexpr double kDefaultSwingMargin = 5.0;

/// Signed error (predicted minus actual) per candidate, split by whether the
/// actual margin is below `margin_threshold` points.
inline SwingBiasReport swing_bias_report(const std::vector<ShareDistribution>& cells,
                                         const GroundTruth& truth,
                                         double margin_threshold = kDefaultSwingMargin) {
  if (!(margin_threshold >= 0.0))
    throw Error(ErrorCode::InvalidConfig, "margin threshold must be >= 0");
  auto found = detail::match_cells(cells, truth);
  SwingBiasReport report;
  report.c1 = truth.candidates.at(0);
  report.c2 = truth.candidates.at(1);
  report.year = truth.year;
  report.margin_threshold = margin_threshold;

  struct Acc {
    double s1 = 0.0, s2 = 0.0;
  } swing_acc, safe_acc, all_acc;
  for (const auto& state : truth.states()) {
    const double a1 = truth.share(state, report.c1);
    const double a2 = truth.share(state, report.c2);
    const double d1 = weighted_mean(*found.at({state, report.c1})) - a1;
    const double d2 = weighted_mean(*found.at({state, report.c2})) - a2;
    const bool is_swing = std::abs(a1 - a2) < margin_threshold;
    auto& group = is_swing ? report.swing : report.safe;
    auto& acc = is_swing ? swing_acc : safe_acc;
    group.states.push_back(state);
    acc.s1 += d1;
    acc.s2 += d2;
    all_acc.s1 += d1;
    all_acc.s2 += d2;
  }
  auto finish = [](SwingGroup& g, const Acc& acc) {
    if (g.states.empty()) return;
    const double n = static_cast<double>(g.states.size());
    g.mean_signed_error_c1 = acc.s1 / n;
    g.mean_signed_error_c2 = acc.s2 / n;
  };
  finish(report.swing, swing_acc);
  finish(report.safe, safe_acc);
  const double n = static_cast<double>(report.swing.states.size() + report.safe.states.size());
  if (n > 0) {
    report.overall_signed_error_c1 = all_acc.s1 / n;
    report.overall_signed_error_c2 = all_acc.s2 / n;
  }
  return report;
}

/// All races for one matchup over the allocation's states. Missing cells are
/// reported together, naming every incomplete state.
inline std::map<std::string, StateRace> collect_races(const CellStore& store, const std::string& c1,
                                                      const std::string& c2, int year,
                                                      const std::vector<std::string>& states) {
  std::vector<std::string> missing;
  for (const auto& s : states)
    if (!store.contains({s, c1, c2, year}) || !store.contains({s, c2, c1, year})) missing.push_back(s);
  if (!missing.empty())
    throw Error(ErrorCode::MissingCell,
                "store lacks " + c1 + " vs " + c2 + " " + std::to_string(year) +
                    " cells for: " + detail::join(missing),
                missing);
  std::map<std::string, StateRace> races;
  for (const auto& s : states) races.emplace(s, store.race(s, c1, c2, year));
  return races;
}

struct StateOutcome {
  WinProbabilities wins;
  double mean_c1 = 0.0;
  double mean_c2 = 0.0;
};

struct MatchupOutcome {
  std::string c1;
  std::string c2;
  int year = 0;
  std::map<std::string, StateOutcome> states;
  ECDistribution ec;
  int threshold = 0;
};

inline MatchupOutcome simulate_matchup(const std::map<std::string, StateRace>& races,
                                       const EVAllocation& alloc, std::optional<int> threshold = {}) {
  MatchupOutcome out;
  if (races.empty()) throw Error(ErrorCode::MissingCell, "no races to simulate");
  const auto& first = races.begin()->second;
  out.c1 = first.c1().meta().candidate;
  out.c2 = first.c2().meta().candidate;
  out.year = first.year();
  StateWins p;
  for (const auto& [state, race] : races) {
    StateOutcome so;
    so.wins = win_probability(race);
    so.mean_c1 = weighted_mean(race.c1());
    so.mean_c2 = weighted_mean(race.c2());
    p[state] = so.wins.p_c1_wins;
    out.states.emplace(state, so);
  }
  out.ec = ec_distribution(p, alloc);
  out.threshold = threshold.value_or(alloc.majority());
  return out;
}

/// One cell of a matchup grid; the row candidate is c1.
struct MatchupCell {
  std::string row;
  std::string col;
  double expected_ev = 0.0;
  double win_prob = 0.0;
  double tie_prob = 0.0;   // exact split; 0 when the total is odd
  double loss_prob = 0.0;
};

struct MatchupGrid {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  int year = 0;
  int e_total = 0;
  int threshold = 0;
  std::map<std::pair<std::string, std::string>, MatchupCell> cells;
};

struct MatchupOptions {
  std::optional<EVAllocation> allocation;  // default: allocation_for_year
  std::optional<int> threshold;            // default: majority of the allocation
};

inline MatchupCell summarize_matchup(const MatchupOutcome& outcome) {
  MatchupCell cell;
  cell.row = outcome.c1;
  cell.col = outcome.c2;
  cell.expected_ev = expected_votes(outcome.ec);
  cell.win_prob = win_chance(outcome.ec, outcome.threshold);
  cell.loss_prob = loss_chance(outcome.ec, outcome.threshold);
  cell.tie_prob = outcome.ec.e_total % 2 == 0 ? exact_tie_probability(outcome.ec) : 0.0;
  return cell;
}

/// Grids of democrat (rows, c1) against republican (cols) for each year.
/// Every needed cell is gathered up front, so a complete store triggers no
/// fetches and a live repository fetches the gaps in parallel.
inline std::vector<MatchupGrid> run_matchups(CellRepository& repo,
                                             const std::vector<std::string>& republicans,
                                             const std::vector<std::string>& democrats,
                                             const std::vector<int>& years,
                                             const MatchupOptions& options = {}) {
  if (republicans.empty() || democrats.empty() || years.empty())
    throw Error(ErrorCode::InvalidConfig, "matchups need at least one candidate per side and one year");
  std::vector<CellKey> needed;
  for (int year : years) {
    const auto& alloc = options.allocation ? *options.allocation : allocation_for_year(year);
    for (const auto& dem : democrats)
      for (const auto& rep : republicans)
        for (const auto& state : alloc.states()) {
          needed.push_back({state, dem, rep, year});
          needed.push_back({state, rep, dem, year});
        }
  }
  repo.ensure(needed);

  std::vector<MatchupGrid> grids;
  for (int year : years) {
    const auto& alloc = options.allocation ? *options.allocation : allocation_for_year(year);
    MatchupGrid grid;
    grid.rows = democrats;
    grid.cols = republicans;
    grid.year = year;
    grid.e_total = alloc.total();
    grid.threshold = options.threshold.value_or(alloc.majority());
    for (const auto& dem : democrats)
      for (const auto& rep : republicans) {
        try {
          auto races = collect_races(repo.store(), dem, rep, year, alloc.states());
          auto outcome = simulate_matchup(races, alloc, grid.threshold);
          grid.cells.emplace(std::make_pair(dem, rep), summarize_matchup(outcome));
        } catch (const Error& e) {
          throw Error(e.code(), std::to_string(year) + " " + dem + " vs " + rep + ": " + e.what(),
                      e.subjects());
        }
      }
    grids.push_back(std::move(grid));
  }
  return grids;
}

}  // namespace distelect
