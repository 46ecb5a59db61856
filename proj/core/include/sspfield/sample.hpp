#pragma once

#include <optional>
#include <vector>

#include "sspfield/geo.hpp"
#include "sspfield/profile.hpp"

namespace sspfield {

struct MonthTag {
  int year = 0;
  int month = 0;  // 1..12

  /// Months since year 0, for range comparisons.
  int index() const { return year * 12 + (month - 1); }
};

inline bool operator==(const MonthTag& a, const MonthTag& b) {
  return a.year == b.year && a.month == b.month;
}
inline bool operator<(const MonthTag& a, const MonthTag& b) {
  return a.index() < b.index();
}

/// One labeled grid point surrounding a target: where it is, how warm the
/// surface is, and its historical profile.
struct ReferenceEntry {
  GeoCoordinate coord;
  double sst = 0.0;  // degrees C
  SoundSpeedProfile profile;
};

/// The neighbors of a 3x3 window minus its center; 8 entries by default.
struct ReferenceSet {
  std::vector<ReferenceEntry> entries;

  std::size_t size() const { return entries.size(); }
  /// Depth dimension shared by all reference profiles.
  std::size_t depth_count() const {
    return entries.empty() ? 0 : entries.front().profile.size();
  }
};

/// One training/evaluation unit: the target labels, its reference window,
/// and (when known) the true profile at the target.
struct Sample {
  GeoCoordinate target_coord;
  double target_sst = 0.0;
  ReferenceSet refs;
  std::optional<SoundSpeedProfile> target_profile;
  MonthTag epoch_tag;
};

/// Elementwise arithmetic mean of the reference profiles.
/// Throws EmptyDataset for an empty set and ShapeError on mismatched lengths.
SoundSpeedProfile mean_reference_profile(const ReferenceSet& refs);

}  // namespace sspfield
