#pragma once

#include <cmath>

#include "sspfield/errors.hpp"

namespace sspfield {

/// Geographic position in degrees. Latitude is negative in the southern hemisphere.
struct GeoCoordinate {
  double lon = 0.0;  // degrees east, in [-180, 360)
  double lat = 0.0;  // degrees north, in [-90, 90]

  bool valid() const {
    return std::isfinite(lon) && std::isfinite(lat) &&
           lon >= -180.0 && lon < 360.0 && lat >= -90.0 && lat <= 90.0;
  }

  void check() const {
    if (!valid()) throw RangeError("coordinate out of range");
  }
};

inline bool operator==(const GeoCoordinate& a, const GeoCoordinate& b) {
  return a.lon == b.lon && a.lat == b.lat;
}

/// Planar distance in degrees (no great-circle correction).
inline double planar_distance(const GeoCoordinate& a, const GeoCoordinate& b) {
  const double dx = a.lon - b.lon;
  const double dy = a.lat - b.lat;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace sspfield
