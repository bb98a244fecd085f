// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON, CSV and SVG renderings of analysis results. Every renderer is a pure
// function of its input, so equal inputs give byte-identical output.

#include <map>
#include <string>

#include <json.hpp>

#include "distelect/analysis.hpp"
#include "distelect/io.hpp"

namespace distelect::report {

using nlohmann::ordered_json;

inline const char* stddev_name(StdDevForm form) {
  return form == StdDevForm::Sample ? "sample" : "population";
}

inline std::string error_table_csv(const ErrorReport& r) {
  std::string out = "state," + io::csv_field(r.c1) + "," + io::csv_field(r.c2) + "\n";
  for (const auto& [state, row] : r.per_state)
    out += io::csv_field(state) + "," + io::format_number(row.error_c1) + "," +
           io::format_number(row.error_c2) + "\n";
  out += "Average Error," + io::format_number(r.mean_c1) + "," + io::format_number(r.mean_c2) + "\n";
  out += "Standard Deviation," + io::format_number(r.stddev_c1) + "," +
         io::format_number(r.stddev_c2) + "\n";
  return out;
}

inline std::string error_table_json(const ErrorReport& r) {
  ordered_json doc;
  doc["year"] = r.year;
  doc["c1"] = r.c1;
  doc["c2"] = r.c2;
  doc["stddev_form"] = stddev_name(r.stddev_form);
  ordered_json states = ordered_json::array();
  for (const auto& [state, row] : r.per_state) {
    ordered_json s;
    s["state"] = state;
    s["predicted_c1"] = row.predicted_c1;
    s["actual_c1"] = row.actual_c1;
    s["error_c1"] = row.error_c1;
    s["predicted_c2"] = row.predicted_c2;
    s["actual_c2"] = row.actual_c2;
    s["error_c2"] = row.error_c2;
    states.push_back(std::move(s));
  }
  doc["states"] = std::move(states);
  doc["mean_c1"] = r.mean_c1;
  doc["mean_c2"] = r.mean_c2;
  doc["stddev_c1"] = r.stddev_c1;
  doc["stddev_c2"] = r.stddev_c2;
  return doc.dump(2) + "\n";
}

inline constexpr const char* kColorC1 = "#2166ac";
inline constexpr const char* kColorC2 = "#b2182b";

struct MapView {
  std::string c1;
  std::string c2;
  int year = 0;
  std::map<std::string, std::string> winners;
  std::map<std::string, std::pair<double, double>> means;  // state -> (c1, c2)
  EVAllocation allocation;
};

inline MapView make_map_view(const std::map<std::string, StateRace>& races, const EVAllocation& alloc) {
  MapView v;
  v.winners = average_case_map(races);
  const auto& first = races.begin()->second;
  v.c1 = first.c1().meta().candidate;
  v.c2 = first.c2().meta().candidate;
  v.year = first.year();
  for (const auto& [state, race] : races)
    v.means[state] = {weighted_mean(race.c1()), weighted_mean(race.c2())};
  v.allocation = alloc;
  return v;
}

inline std::string color_for(const MapView& v, const std::string& state) {
  return v.winners.at(state) == v.c1 ? kColorC1 : kColorC2;
}

inline std::string map_csv(const MapView& v) {
  std::string out = "state,winner,color\n";
  for (const auto& [state, winner] : v.winners)
    out += io::csv_field(state) + "," + io::csv_field(winner) + "," + color_for(v, state) + "\n";
  return out;
}

inline std::string map_json(const MapView& v) {
  ordered_json doc;
  doc["year"] = v.year;
  doc["c1"] = v.c1;
  doc["c2"] = v.c2;
  ordered_json states = ordered_json::array();
  for (const auto& [state, winner] : v.winners) {
    ordered_json s;
    s["state"] = state;
    s["winner"] = winner;
    s["color"] = color_for(v, state);
    s["mean_c1"] = v.means.at(state).first;
    s["mean_c2"] = v.means.at(state).second;
    if (v.allocation.contains(state)) s["electoral_votes"] = v.allocation.at(state);
    states.push_back(std::move(s));
  }
  doc["states"] = std::move(states);
  ordered_json totals = ordered_json::object();
  totals[v.c1] = 0;
  totals[v.c2] = 0;
  for (const auto& [state, winner] : v.winners)
    if (v.allocation.contains(state)) totals[winner] = totals[winner].get<int>() + v.allocation.at(state);
  doc["electoral_votes"] = std::move(totals);
  return doc.dump(2) + "\n";
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// One labeled rectangle per state in a fixed grid, colored by winner.
inline std::string map_svg(const MapView& v) {
  constexpr int kCols = 8, kW = 150, kH = 60, kGap = 6, kTop = 40;
  const int n = static_cast<int>(v.winners.size());
  const int rows = (n + kCols - 1) / kCols;
  const int width = kCols * (kW + kGap) + kGap;
  const int height = kTop + rows * (kH + kGap) + kGap;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
  out += "  <text x=\"" + std::to_string(kGap) + "\" y=\"26\" font-size=\"18\">" +
         xml_escape(v.c1) + " vs " + xml_escape(v.c2) + " " + std::to_string(v.year) +
         " (average case)</text>\n";
  int i = 0;
  for (const auto& [state, winner] : v.winners) {
    const int x = kGap + (i % kCols) * (kW + kGap);
    const int y = kTop + (i / kCols) * (kH + kGap);
    std::string label = xml_escape(state);
    if (v.allocation.contains(state)) label += " (" + std::to_string(v.allocation.at(state)) + ")";
    out += "  <g class=\"state\"><rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
           "\" width=\"" + std::to_string(kW) + "\" height=\"" + std::to_string(kH) + "\" fill=\"" +
           color_for(v, state) + "\"/><text x=\"" + std::to_string(x + kW / 2) + "\" y=\"" +
           std::to_string(y + kH / 2 + 5) +
           "\" font-size=\"12\" fill=\"#ffffff\" text-anchor=\"middle\">" + label + "</text></g>\n";
    ++i;
  }
  out += "</svg>\n";
  return out;
}

inline std::string wins_csv(const MatchupOutcome& m) {
  std::string out = "state,p_c1_wins,p_c2_wins,raw_tie_mass,mean_c1,mean_c2\n";
  for (const auto& [state, so] : m.states)
    out += io::csv_field(state) + "," + io::format_number(so.wins.p_c1_wins) + "," +
           io::format_number(so.wins.p_c2_wins) + "," + io::format_number(so.wins.raw_tie_mass) + "," +
           io::format_number(so.mean_c1) + "," + io::format_number(so.mean_c2) + "\n";
  return out;
}

inline std::string wins_json(const MatchupOutcome& m) {
  ordered_json doc;
  doc["year"] = m.year;
  doc["c1"] = m.c1;
  doc["c2"] = m.c2;
  ordered_json states = ordered_json::array();
  for (const auto& [state, so] : m.states) {
    ordered_json s;
    s["state"] = state;
    s["p_c1_wins"] = so.wins.p_c1_wins;
    s["p_c2_wins"] = so.wins.p_c2_wins;
    s["raw_tie_mass"] = so.wins.raw_tie_mass;
    s["mean_c1"] = so.mean_c1;
    s["mean_c2"] = so.mean_c2;
    states.push_back(std::move(s));
  }
  doc["states"] = std::move(states);
  return doc.dump(2) + "\n";
}

/// Headline numbers for an Electoral College distribution.
inline std::string ec_summary_json(const MatchupOutcome& m) {
  ordered_json doc;
  doc["year"] = m.year;
  doc["c1"] = m.c1;
  doc["c2"] = m.c2;
  doc["e_total"] = m.ec.e_total;
  doc["threshold"] = m.threshold;
  doc["win_chance"] = win_chance(m.ec, m.threshold);
  doc["loss_chance"] = loss_chance(m.ec, m.threshold);
  if (m.ec.e_total % 2 == 0)
    doc["exact_tie_probability"] = exact_tie_probability(m.ec);
  else
    doc["exact_tie_probability"] = nullptr;
  doc["expected_ev_c1"] = expected_votes(m.ec);
  doc["expected_ev_c2"] = m.ec.e_total - expected_votes(m.ec);
  return doc.dump(2) + "\n";
}

inline std::string swing_json(const SwingBiasReport& r) {
  auto group = [](const SwingGroup& g) {
    ordered_json j;
    j["count"] = g.states.size();
    j["states"] = g.states;
    j["mean_signed_error_c1"] = g.mean_signed_error_c1 ? ordered_json(*g.mean_signed_error_c1) : ordered_json();
    j["mean_signed_error_c2"] = g.mean_signed_error_c2 ? ordered_json(*g.mean_signed_error_c2) : ordered_json();
    return j;
  };
  ordered_json doc;
  doc["margin_threshold"] = r.margin_threshold;
  doc["year"] = r.year;
  doc["c1"] = r.c1;
  doc["c2"] = r.c2;
  doc["swing"] = group(r.swing);
  doc["non_swing"] = group(r.safe);
  doc["overall_signed_error_c1"] = r.overall_signed_error_c1;
  doc["overall_signed_error_c2"] = r.overall_signed_error_c2;
  return doc.dump(2) + "\n";
}

inline std::string swing_csv(const SwingBiasReport& r) {
  std::string out = "# margin_threshold=" + io::format_number(r.margin_threshold) + "\n";
  out += "group,count," + io::csv_field(r.c1 + " mean signed error") + "," +
         io::csv_field(r.c2 + " mean signed error") + "\n";
  auto row = [&](const char* name, const SwingGroup& g) {
    out += std::string(name) + "," + std::to_string(g.states.size()) + "," +
           (g.mean_signed_error_c1 ? io::format_number(*g.mean_signed_error_c1) : "") + "," +
           (g.mean_signed_error_c2 ? io::format_number(*g.mean_signed_error_c2) : "") + "\n";
  };
  row("swing", r.swing);
  row("non_swing", r.safe);
  out += "all," + std::to_string(r.swing.states.size() + r.safe.states.size()) + "," +
         io::format_number(r.overall_signed_error_c1) + "," +
         io::format_number(r.overall_signed_error_c2) + "\n";
  return out;
}

inline std::string grids_json(const std::vector<MatchupGrid>& grids, std::size_t fetches) {
  ordered_json doc;
  doc["fetches"] = fetches;
  ordered_json arr = ordered_json::array();
  for (const auto& g : grids) {
    ordered_json jg;
    jg["year"] = g.year;
    jg["e_total"] = g.e_total;
    jg["threshold"] = g.threshold;
    jg["rows"] = g.rows;
    jg["cols"] = g.cols;
    ordered_json cells = ordered_json::array();
    for (const auto& r : g.rows)
      for (const auto& c : g.cols) {
        const auto& cell = g.cells.at({r, c});
        ordered_json jc;
        jc["row"] = r;
        jc["col"] = c;
        jc["expected_ev"] = cell.expected_ev;
        jc["win_prob"] = cell.win_prob;
        jc["tie_prob"] = cell.tie_prob;
        jc["loss_prob"] = cell.loss_prob;
        cells.push_back(std::move(jc));
      }
    jg["cells"] = std::move(cells);
    arr.push_back(std::move(jg));
  }
  doc["grids"] = std::move(arr);
  return doc.dump(2) + "\n";
}

inline std::string grids_csv(const std::vector<MatchupGrid>& grids) {
  std::string out = "year,row,col,expected_ev,win_prob,tie_prob,loss_prob\n";
  for (const auto& g : grids)
    for (const auto& r : g.rows)
      for (const auto& c : g.cols) {
        const auto& cell = g.cells.at({r, c});
        out += std::to_string(g.year) + "," + io::csv_field(r) + "," + io::csv_field(c) + "," +
               io::format_number(cell.expected_ev) + "," + io::format_number(cell.win_prob) + "," +
               io::format_number(cell.tie_prob) + "," + io::format_number(cell.loss_prob) + "\n";
      }
  return out;
}

}  // namespace distelect::report
