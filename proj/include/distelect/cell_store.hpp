// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file cell_store.hpp
 * @brief Versioned JSON persistence for share distributions.
 *
 * Layout:
 *
 *     { "version": 1,
 *       "cells": [ { "meta": { "state": ..., "candidate": ..., "opponent": ...,
 *                              "year": ..., "model": ..., "prompt_fingerprint": ... },
 *                    "conforming_mass": 0.93,
 *                    "masses": { "47": 0.25, "48": 0.75 } } ] }
 *
 * Keys are written in a fixed order and masses in ascending share order, so
 * equal cell lists always serialize to identical bytes.
 */

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "distelect/io.hpp"
#include "distelect/pairwise_win.hpp"
#include "distelect/share_distribution.hpp"

namespace distelect {

inline constexpr int kCellFormatVersion = 1;

inline std::string serialize_cells(const std::vector<ShareDistribution>& cells) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["version"] = kCellFormatVersion;
  doc["cells"] = ordered_json::array();
  for (const auto& cell : cells) {
    const auto& m = cell.meta();
    ordered_json meta;
    meta["state"] = m.state;
    meta["candidate"] = m.candidate;
    meta["opponent"] = m.opponent;
    meta["year"] = m.year;
    meta["model"] = m.model;
    meta["prompt_fingerprint"] = m.prompt_fingerprint;
    ordered_json masses = ordered_json::object();
    for (const auto& [share, mass] : cell.masses()) masses[std::to_string(share)] = mass;
    ordered_json entry;
    entry["meta"] = std::move(meta);
    entry["conforming_mass"] = cell.conforming_mass();
    entry["masses"] = std::move(masses);
    doc["cells"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorCode::SchemaError, where + "." + key + ": missing");
  return obj.at(key);
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw Error(ErrorCode::SchemaError, where + "." + key + ": not a string");
  return v.get<std::string>();
}

}  // namespace detail

inline std::vector<ShareDistribution> parse_cells(const std::string& text,
                                                  const std::string& source = "cells") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, source + ": invalid JSON: " + e.what());
  }
  const auto& version = detail::require(doc, "version", source);
  if (!version.is_number_integer() || version.get<int>() != kCellFormatVersion)
    throw Error(ErrorCode::SchemaError, source + ".version: expected " +
                                            std::to_string(kCellFormatVersion));
  const auto& cells = detail::require(doc, "cells", source);
  if (!cells.is_array()) throw Error(ErrorCode::SchemaError, source + ".cells: not an array");

  std::vector<ShareDistribution> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string where = source + ".cells[" + std::to_string(i) + "]";
    const auto& cell = cells[i];
    const auto& jm = detail::require(cell, "meta", where);
    CellMeta meta;
    meta.state = detail::require_string(jm, "state", where + ".meta");
    meta.candidate = detail::require_string(jm, "candidate", where + ".meta");
    meta.opponent = detail::require_string(jm, "opponent", where + ".meta");
    const auto& year = detail::require(jm, "year", where + ".meta");
    if (!year.is_number_integer())
      throw Error(ErrorCode::SchemaError, where + ".meta.year: not an integer");
    meta.year = year.get<int>();
    meta.model = detail::require_string(jm, "model", where + ".meta");
    meta.prompt_fingerprint = detail::require_string(jm, "prompt_fingerprint", where + ".meta");

    const auto& cm = detail::require(cell, "conforming_mass", where);
    if (!cm.is_number())
      throw Error(ErrorCode::SchemaError, where + ".conforming_mass: not a number");

    const auto& jmasses = detail::require(cell, "masses", where);
    if (!jmasses.is_object())
      throw Error(ErrorCode::SchemaError, where + ".masses: not an object");
    ShareDistribution::MassMap masses;
    for (const auto& [key, value] : jmasses.items()) {
      Share share = 0;
      try {
        share = io::parse_number<Share>(key, where + ".masses key");
      } catch (const Error& e) {
        throw Error(ErrorCode::SchemaError, e.what());
      }
      if (!value.is_number())
        throw Error(ErrorCode::SchemaError, where + ".masses[\"" + key + "\"]: not a number");
      masses[share] = value.get<double>();
    }
    try {
      out.push_back(ShareDistribution::from_normalized(masses, cm.get<double>(), std::move(meta)));
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaError, where + ": " + e.what());
    }
  }
  return out;
}

inline void save_cells(const std::vector<ShareDistribution>& cells,
                       const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_cells(cells));
}

inline std::vector<ShareDistribution> load_cells(const std::filesystem::path& path) {
  return parse_cells(io::read_file(path), path.string());
}

/// Identifies one directional cell: `candidate` running against `opponent`.
struct CellKey {
  std::string state;
  std::string candidate;
  std::string opponent;
  int year = 0;

  auto operator<=>(const CellKey&) const = default;

  static CellKey of(const CellMeta& m) { return {m.state, m.candidate, m.opponent, m.year}; }

  std::string describe() const {
    return candidate + " vs " + opponent + ", " + state + " " + std::to_string(year);
  }
};

/// An indexed collection of cells. Adding a cell whose key is already present
/// replaces it in place.
class CellStore {
 public:
  CellStore() = default;
  explicit CellStore(std::vector<ShareDistribution> cells) {
    for (auto& c : cells) put(std::move(c));
  }

  static CellStore load(const std::filesystem::path& path) { return CellStore(load_cells(path)); }
  void save(const std::filesystem::path& path) const { save_cells(cells_, path); }

  void put(ShareDistribution cell) {
    auto key = CellKey::of(cell.meta());
    auto it = index_.find(key);
    if (it != index_.end()) {
      cells_[it->second] = std::move(cell);
    } else {
      index_.emplace(std::move(key), cells_.size());
      cells_.push_back(std::move(cell));
    }
  }

  const ShareDistribution* find(const CellKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &cells_[it->second];
  }

  bool contains(const CellKey& key) const { return index_.count(key) != 0; }

  const ShareDistribution& at(const CellKey& key) const {
    if (const auto* cell = find(key)) return *cell;
    throw Error(ErrorCode::MissingCell, "no cell for " + key.describe(), {key.state});
  }

  StateRace race(const std::string& state, const std::string& c1, const std::string& c2,
                 int year) const {
    return StateRace(at({state, c1, c2, year}), at({state, c2, c1, year}));
  }

  const std::vector<ShareDistribution>& cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

 private:
  std::vector<ShareDistribution> cells_;
  std::map<CellKey, std::size_t> index_;
};

}  // namespace distelect
