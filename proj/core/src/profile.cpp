#include "sspfield/profile.hpp"

#include <cmath>

#include "sspfield/sample.hpp"

namespace sspfield {

bool SoundSpeedProfile::physically_valid() const {
  if (speeds.empty()) return false;
  for (double s : speeds) {
    if (!std::isfinite(s) || s <= 1300.0 || s >= 1700.0) return false;
  }
  return true;
}

bool operator==(const SoundSpeedProfile& a, const SoundSpeedProfile& b) {
  return a.depth_step == b.depth_step && a.speeds == b.speeds;
}

SoundSpeedProfile interpolate_profile(std::span<const double> raw_depths,
                                      std::span<const double> raw_speeds,
                                      double step) {
  if (raw_depths.size() < 2) throw InvalidProfile("need at least two depth knots");
  if (raw_depths.size() != raw_speeds.size())
    throw InvalidProfile("depth/speed arrays differ in length");
  if (!(step > 0.0)) throw InvalidProfile("step must be positive");
  for (std::size_t i = 0; i < raw_depths.size(); ++i) {
    if (!std::isfinite(raw_depths[i])) throw InvalidProfile("non-finite depth");
    if (!std::isfinite(raw_speeds[i])) throw InvalidProfile("non-finite speed");
    if (i > 0 && !(raw_depths[i] > raw_depths[i - 1]))
      throw InvalidProfile("depths must be strictly increasing");
  }

  const double d0 = raw_depths.front();
  const double d1 = raw_depths.back();
  // Tiny slack so an exactly divisible span keeps its last grid point.
  const auto n = static_cast<std::size_t>(std::floor((d1 - d0) / step + 1e-9)) + 1;

  SoundSpeedProfile out;
  out.depth_step = step;
  out.speeds.resize(n);

  std::size_t seg = 0;  // current knot interval [seg, seg+1]
  for (std::size_t i = 0; i < n; ++i) {
    const double d = d0 + static_cast<double>(i) * step;
    while (seg + 2 < raw_depths.size() && d >= raw_depths[seg + 1]) ++seg;
    const double x0 = raw_depths[seg];
    const double x1 = raw_depths[seg + 1];
    const double t = (d - x0) / (x1 - x0);
    if (d <= x0) {
      out.speeds[i] = raw_speeds[seg];
    } else if (d >= x1) {
      out.speeds[i] = raw_speeds[seg + 1];
    } else {
      out.speeds[i] = raw_speeds[seg] + (raw_speeds[seg + 1] - raw_speeds[seg]) * t;
    }
  }
  return out;
}

SoundSpeedProfile mean_reference_profile(const ReferenceSet& refs) {
  if (refs.entries.empty()) throw EmptyDataset("mean of an empty reference set");
  const std::size_t d = refs.entries.front().profile.size();
  SoundSpeedProfile out;
  out.depth_step = refs.entries.front().profile.depth_step;
  out.speeds.assign(d, 0.0);
  for (const auto& e : refs.entries) {
    if (e.profile.size() != d) throw ShapeError("reference profiles differ in length");
    for (std::size_t i = 0; i < d; ++i) out.speeds[i] += e.profile.speeds[i];
  }
  const double inv = 1.0 / static_cast<double>(refs.entries.size());
  for (double& s : out.speeds) s *= inv;
  return out;
}

}  // namespace sspfield
