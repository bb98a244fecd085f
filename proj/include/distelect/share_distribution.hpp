// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file share_distribution.hpp
 * @brief Probability mass over integer vote shares 0..100 for one
 *        (state, candidate, year) cell.
 *
 * A ShareDistribution is immutable once built. Masses are stored sparsely,
 * keyed by share, with zero entries omitted, and always sum to 1. The
 * fraction of the model's original probability that parsed as a valid share
 * is carried separately as `conforming_mass`.
 */

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "distelect/error.hpp"

namespace distelect {

inline constexpr int kMinShare = 0;
inline constexpr int kMaxShare = 100;
inline constexpr int kShareCount = kMaxShare - kMinShare + 1;

/// Stored distributions must sum to 1 within this.
inline constexpr double kStoredSumTolerance = 1e-9;

using Share = int;
using DenseMasses = std::array<double, kShareCount>;

struct CellMeta {
  std::string state;
  std::string candidate;
  std::string opponent;
  int year = 0;
  std::string model;
  std::string prompt_fingerprint;

  bool operator==(const CellMeta&) const = default;

  void validate() const {
    if (state.empty()) throw Error(ErrorCode::InvalidMeta, "state is empty");
    if (candidate.empty() || opponent.empty())
      throw Error(ErrorCode::InvalidMeta, "candidate and opponent must be named");
    if (candidate == opponent)
      throw Error(ErrorCode::InvalidMeta,
                  "candidate and opponent are both '" + candidate + "'");
    if (year < 1000 || year > 9999)
      throw Error(ErrorCode::InvalidMeta,
                  "year " + std::to_string(year) + " is not a 4-digit year");
  }
};

inline bool is_valid_share(long long share) noexcept {
  return share >= kMinShare && share <= kMaxShare;
}

class ShareDistribution {
 public:
  using MassMap = std::map<Share, double>;

  /// Normalizes `raw_masses` to total 1. Zero entries are dropped.
  static ShareDistribution normalize(const MassMap& raw_masses, double conforming_mass,
                                     CellMeta meta) {
    check_conforming(conforming_mass);
    meta.validate();
    double total = 0.0;
    for (const auto& [share, mass] : raw_masses) {
      check_entry(share, mass);
      total += mass;
    }
    if (raw_masses.empty() || !(total > 0.0))
      throw Error(ErrorCode::EmptyDistribution, "distribution for " + describe(meta) +
                                                    " has no positive mass");
    if (!std::isfinite(total))
      throw Error(ErrorCode::NegativeMass, "distribution mass is not finite");
    MassMap masses;
    for (const auto& [share, mass] : raw_masses)
      if (mass > 0.0) masses.emplace(share, mass / total);
    return ShareDistribution(std::move(masses), conforming_mass, std::move(meta));
  }

  /// Adopts masses that are already normalized, without rescaling them, so a
  /// value read back from disk is bit-identical to the one written.
  static ShareDistribution from_normalized(const MassMap& masses, double conforming_mass,
                                           CellMeta meta) {
    check_conforming(conforming_mass);
    meta.validate();
    double total = 0.0;
    MassMap kept;
    for (const auto& [share, mass] : masses) {
      check_entry(share, mass);
      total += mass;
      if (mass > 0.0) kept.emplace(share, mass);
    }
    if (kept.empty())
      throw Error(ErrorCode::EmptyDistribution,
                  "distribution for " + describe(meta) + " has no positive mass");
    if (std::abs(total - 1.0) > kStoredSumTolerance)
      throw Error(ErrorCode::EmptyDistribution,
                  "distribution for " + describe(meta) + " sums to " +
                      std::to_string(total) + ", not 1");
    return ShareDistribution(std::move(kept), conforming_mass, std::move(meta));
  }

  const MassMap& masses() const noexcept { return masses_; }
  double conforming_mass() const noexcept { return conforming_mass_; }
  const CellMeta& meta() const noexcept { return meta_; }

  double at(Share share) const noexcept {
    auto it = masses_.find(share);
    return it == masses_.end() ? 0.0 : it->second;
  }

  DenseMasses dense() const noexcept {
    DenseMasses out{};
    for (const auto& [share, mass] : masses_) out[share - kMinShare] = mass;
    return out;
  }

  bool operator==(const ShareDistribution&) const = default;

 private:
  ShareDistribution(MassMap masses, double conforming_mass, CellMeta meta)
      : masses_(std::move(masses)), conforming_mass_(conforming_mass), meta_(std::move(meta)) {}

  static void check_entry(Share share, double mass) {
    if (!is_valid_share(share))
      throw Error(ErrorCode::ShareOutOfRange,
                  "share " + std::to_string(share) + " is outside 0..100");
    if (!(mass >= 0.0))
      throw Error(ErrorCode::NegativeMass, "share " + std::to_string(share) +
                                               " has negative or NaN mass");
  }

  static void check_conforming(double conforming_mass) {
    if (!(conforming_mass >= 0.0 && conforming_mass <= 1.0))
      throw Error(ErrorCode::ProbabilityOutOfRange,
                  "conforming_mass " + std::to_string(conforming_mass) + " is outside [0,1]");
  }

  static std::string describe(const CellMeta& meta) {
    return meta.candidate + " in " + meta.state + " " + std::to_string(meta.year);
  }

  MassMap masses_;
  double conforming_mass_ = 1.0;
  CellMeta meta_;
};

inline ShareDistribution make_distribution(const ShareDistribution::MassMap& raw_masses,
                                           double conforming_mass, CellMeta meta) {
  return ShareDistribution::normalize(raw_masses, conforming_mass, std::move(meta));
}

/// Expected vote share in percent.
inline double weighted_mean(const ShareDistribution& dist) noexcept {
  double mean = 0.0;
  for (const auto& [share, mass] : dist.masses()) mean += share * mass;
  return mean;
}

/// Probability mass strictly below `threshold`.
inline double cdf_below(const ShareDistribution& dist, Share threshold) {
  if (!is_valid_share(threshold))
    throw Error(ErrorCode::ShareOutOfRange,
                "threshold " + std::to_string(threshold) + " is outside 0..100");
  double sum = 0.0;
  for (auto it = dist.masses().begin(); it != dist.masses().end() && it->first < threshold; ++it)
    sum += it->second;
  return sum;
}

}  // namespace distelect
