#pragma once

#include <span>
#include <vector>

#include "sspfield/errors.hpp"

namespace sspfield {

/// Sound speeds in m/s on a uniform depth grid starting at the shallowest
/// measured level. The grid step is 1 m unless configured otherwise.
struct SoundSpeedProfile {
  double depth_step = 1.0;          // meters between consecutive entries
  std::vector<double> speeds;       // m/s, length D

  std::size_t size() const { return speeds.size(); }
  double operator[](std::size_t i) const { return speeds[i]; }
  double& operator[](std::size_t i) { return speeds[i]; }

  /// Physical plausibility gate used on ingest only; generated profiles are
  /// not forced back into this band.
  bool physically_valid() const;
};

bool operator==(const SoundSpeedProfile& a, const SoundSpeedProfile& b);

/// Resample scattered (depth, speed) observations to a uniform grid with the
/// given step, spanning [raw_depths.front(), raw_depths.back()]. Values are
/// piecewise-linear between knots and exact at them.
///
/// Throws InvalidProfile for non-monotone depths, fewer than two knots,
/// mismatched array lengths, or non-finite speeds.
SoundSpeedProfile interpolate_profile(std::span<const double> raw_depths,
                                      std::span<const double> raw_speeds,
                                      double step);

}  // namespace sspfield
