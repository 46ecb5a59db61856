#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sspfield/sample.hpp"

namespace sspfield {

struct GridCell {
  double sst = 0.0;  // degrees C
  SoundSpeedProfile profile;
};

/// A regular lon/lat grid of monthly cells. A cell is present only when both
/// the SSP and SST sources cover it for that month.
struct GridField {
  GeoCoordinate origin;   // coordinate of cell (0, 0)
  double cell_deg = 1.0;  // grid spacing, degrees
  int n_lon = 0;
  int n_lat = 0;
  std::vector<MonthTag> months;  // ascending, unique
  // cells[month_index][iy * n_lon + ix]
  std::vector<std::vector<std::optional<GridCell>>> cells;

  const std::optional<GridCell>& at(int month_index, int ix, int iy) const {
    return cells[static_cast<std::size_t>(month_index)]
                [static_cast<std::size_t>(iy) * static_cast<std::size_t>(n_lon) +
                 static_cast<std::size_t>(ix)];
  }
  std::optional<GridCell>& at(int month_index, int ix, int iy) {
    return cells[static_cast<std::size_t>(month_index)]
                [static_cast<std::size_t>(iy) * static_cast<std::size_t>(n_lon) +
                 static_cast<std::size_t>(ix)];
  }

  GeoCoordinate cell_coord(int ix, int iy) const {
    return {origin.lon + cell_deg * ix, origin.lat + cell_deg * iy};
  }

  /// Depth dimension shared by all present profiles (0 when the field is empty).
  std::size_t depth_count() const;
};

/// Temporal and spatial split policy for carving train/test samples out of a
/// field. Center cells of train windows sit on a stride lattice; test centers
/// sit on the same lattice shifted by the offset, so the two sets never meet
/// as long as the offset is not a multiple of the stride.
struct SplitSpec {
  MonthTag train_begin{2004, 1};
  MonthTag train_end{2020, 12};
  MonthTag test_begin{2021, 1};
  MonthTag test_end{2023, 6};
  double train_stride_deg = 3.0;
  double test_offset_deg = 1.0;
};

struct SampleSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Load and align the two grid CSV files (formats documented in save_grid).
/// cell_deg fixes the grid spacing used to index coordinates.
GridField load_grid(const std::string& ssp_path, const std::string& sst_path,
                    double cell_deg = 1.0);

/// Write a field back to the two CSV formats, deterministically ordered.
/// SSP file:  "# sspfield-grid v1" then "lon_deg,lat_deg,year,month,s0,...".
/// SST file:  "# sspfield-grid v1" then "lon_deg,lat_deg,year,month,sst_c".
void save_grid(const GridField& field, const std::string& ssp_path,
               const std::string& sst_path);

/// Slide 3x3 windows over the field and split them per the policy. Every sample
/// has its 8 neighbors and center present in the same month. Throws EmptySplit
/// if either side ends up empty and ConfigError for inconsistent splits.
SampleSplit build_samples(const GridField& field, const SplitSpec& split);

/// Bound on |speed difference| between horizontally adjacent synthetic cells
/// at any depth, and on the second difference of a synthetic profile along
/// depth. Tests scan generated fields against these.
inline constexpr double kSynthSpatialBound = 12.0;
inline constexpr double kSynthSmoothnessBound = 1.0;

/// Deterministic artificial ocean: smooth in depth, spatially correlated, and
/// with surface speeds that track the generated SST. Month tags start at
/// 2000-01. Same seed, same field, bit for bit.
GridField synthesize_field(std::uint64_t seed, int n_lon, int n_lat, int months,
                           int depth);

}  // namespace sspfield
