#include "sspfield/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>

#include "sspfield/errors.hpp"

namespace sspfield {
namespace {

constexpr std::string_view kVersionLine = "# sspfield-grid v1";
constexpr double kPi = 3.14159265358979323846;

std::string loc(const std::string& path, std::size_t lineno) {
  return path + ":" + std::to_string(lineno);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(std::string_view s, const std::string& path, std::size_t lineno) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(loc(path, lineno) + ": bad numeric field '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s, const std::string& path, std::size_t lineno) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(loc(path, lineno) + ": bad integer field '" + std::string(s) + "'");
  return v;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RowKey {
  int month_index;  // MonthTag::index()
  // Coordinates keyed by value; cell indices are assigned after the full
  // extent is known, so loading is independent of row order.
  double lon, lat;
  bool operator<(const RowKey& o) const {
    if (month_index != o.month_index) return month_index < o.month_index;
    if (lon != o.lon) return lon < o.lon;
    return lat < o.lat;
  }
};

struct ParsedSsp {
  std::map<RowKey, std::vector<double>> rows;
  std::size_t depth = 0;
};

void read_version_line(std::ifstream& in, const std::string& path, std::size_t& lineno) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kVersionLine)
    throw ParseError(loc(path, lineno) + ": expected version line '" +
                     std::string(kVersionLine) + "'");
}

bool next_row(std::ifstream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

MonthTag parse_tag(std::string_view ys, std::string_view ms, const std::string& path,
                   std::size_t lineno) {
  MonthTag tag{parse_int(ys, path, lineno), parse_int(ms, path, lineno)};
  if (tag.month < 1 || tag.month > 12)
    throw ParseError(loc(path, lineno) + ": month out of range");
  return tag;
}

ParsedSsp parse_ssp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::size_t lineno = 0;
  read_version_line(in, path, lineno);

  std::string line;
  if (!next_row(in, line, lineno)) throw ParseError(path + ": missing header");
  auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "lon_deg" || header[1] != "lat_deg" ||
      header[2] != "year" || header[3] != "month" || header[4] != "s0")
    throw ParseError(loc(path, lineno) + ": bad profile header");
  ParsedSsp parsed;
  parsed.depth = header.size() - 4;

  while (next_row(in, line, lineno)) {
    auto f = split_csv(line);
    if (f.size() != 4 + parsed.depth)
      throw ShapeError(loc(path, lineno) + ": expected " +
                       std::to_string(4 + parsed.depth) + " fields, got " +
                       std::to_string(f.size()));
    RowKey key{parse_tag(f[2], f[3], path, lineno).index(),
               parse_double(f[0], path, lineno), parse_double(f[1], path, lineno)};
    std::vector<double> speeds(parsed.depth);
    for (std::size_t i = 0; i < parsed.depth; ++i) {
      speeds[i] = parse_double(f[4 + i], path, lineno);
      if (!(speeds[i] > 1300.0 && speeds[i] < 1700.0))
        throw InvalidProfile(loc(path, lineno) + ": speed " + g17(speeds[i]) +
                             " outside (1300, 1700) m/s");
    }
    if (!parsed.rows.emplace(key, std::move(speeds)).second)
      throw ParseError(loc(path, lineno) + ": duplicate profile row");
  }
  return parsed;
}

std::map<RowKey, double> parse_sst_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::size_t lineno = 0;
  read_version_line(in, path, lineno);

  std::string line;
  if (!next_row(in, line, lineno)) throw ParseError(path + ": missing header");
  if (line != "lon_deg,lat_deg,year,month,sst_c")
    throw ParseError(loc(path, lineno) + ": bad sst header");

  std::map<RowKey, double> rows;
  while (next_row(in, line, lineno)) {
    auto f = split_csv(line);
    if (f.size() != 5)
      throw ShapeError(loc(path, lineno) + ": expected 5 fields, got " +
                       std::to_string(f.size()));
    RowKey key{parse_tag(f[2], f[3], path, lineno).index(),
               parse_double(f[0], path, lineno), parse_double(f[1], path, lineno)};
    double sst = parse_double(f[4], path, lineno);
    if (!std::isfinite(sst))
      throw ParseError(loc(path, lineno) + ": non-finite sst");
    if (!rows.emplace(key, sst).second)
      throw ParseError(loc(path, lineno) + ": duplicate sst row");
  }
  return rows;
}

int cell_index(double coord, double min_coord, double cell_deg, const char* axis) {
  double raw = (coord - min_coord) / cell_deg;
  int idx = static_cast<int>(std::llround(raw));
  if (std::abs(raw - idx) > 1e-6)
    throw ParseError(std::string("coordinate off the ") + axis + " grid: " + g17(coord));
  return idx;
}

}  // namespace

std::size_t GridField::depth_count() const {
  for (const auto& layer : cells)
    for (const auto& cell : layer)
      if (cell) return cell->profile.size();
  return 0;
}

GridField load_grid(const std::string& ssp_path, const std::string& sst_path,
                    double cell_deg) {
  if (!(cell_deg > 0.0)) throw ConfigError("cell_deg must be positive");
  ParsedSsp ssp = parse_ssp_file(ssp_path);
  std::map<RowKey, double> sst = parse_sst_file(sst_path);

  double min_lon = 0, max_lon = 0, min_lat = 0, max_lat = 0;
  bool any = false;
  std::set<int> ssp_months, sst_months;
  auto extend = [&](const RowKey& k) {
    if (!any) {
      min_lon = max_lon = k.lon;
      min_lat = max_lat = k.lat;
      any = true;
    } else {
      min_lon = std::min(min_lon, k.lon);
      max_lon = std::max(max_lon, k.lon);
      min_lat = std::min(min_lat, k.lat);
      max_lat = std::max(max_lat, k.lat);
    }
  };
  for (const auto& [k, v] : ssp.rows) {
    extend(k);
    ssp_months.insert(k.month_index);
  }
  for (const auto& [k, v] : sst) {
    extend(k);
    sst_months.insert(k.month_index);
  }
  GridField field;
  field.cell_deg = cell_deg;
  if (!any) return field;  // no rows at all: empty field, no months
  field.origin = GeoCoordinate{min_lon, min_lat};
  field.origin.check();
  field.n_lon = cell_index(max_lon, min_lon, cell_deg, "lon") + 1;
  field.n_lat = cell_index(max_lat, min_lat, cell_deg, "lat") + 1;

  // Months covered by both sources, ascending.
  std::vector<int> month_indices;
  std::set_intersection(ssp_months.begin(), ssp_months.end(), sst_months.begin(),
                        sst_months.end(), std::back_inserter(month_indices));
  for (int mi : month_indices)
    field.months.push_back(MonthTag{mi / 12, mi % 12 + 1});

  field.cells.assign(field.months.size(),
                     std::vector<std::optional<GridCell>>(
                         static_cast<std::size_t>(field.n_lon) * field.n_lat));
  for (auto& [key, speeds] : ssp.rows) {
    auto it = sst.find(key);
    if (it == sst.end()) continue;
    auto mit = std::lower_bound(month_indices.begin(), month_indices.end(),
                                key.month_index);
    std::size_t m = static_cast<std::size_t>(mit - month_indices.begin());
    int ix = cell_index(key.lon, min_lon, cell_deg, "lon");
    int iy = cell_index(key.lat, min_lat, cell_deg, "lat");
    GridCell cell;
    cell.sst = it->second;
    cell.profile.speeds = std::move(speeds);
    field.at(static_cast<int>(m), ix, iy) = std::move(cell);
  }
  return field;
}

void save_grid(const GridField& field, const std::string& ssp_path,
               const std::string& sst_path) {
  std::ofstream ssp_out(ssp_path);
  if (!ssp_out) throw IoError("cannot write " + ssp_path);
  std::ofstream sst_out(sst_path);
  if (!sst_out) throw IoError("cannot write " + sst_path);

  std::size_t depth = field.depth_count();
  ssp_out << kVersionLine << "\nlon_deg,lat_deg,year,month";
  for (std::size_t i = 0; i < depth; ++i) ssp_out << ",s" << i;
  ssp_out << "\n";
  sst_out << kVersionLine << "\nlon_deg,lat_deg,year,month,sst_c\n";

  for (std::size_t m = 0; m < field.months.size(); ++m) {
    const MonthTag& tag = field.months[m];
    for (int iy = 0; iy < field.n_lat; ++iy)
      for (int ix = 0; ix < field.n_lon; ++ix) {
        const auto& cell = field.at(static_cast<int>(m), ix, iy);
        if (!cell) continue;
        GeoCoordinate c = field.cell_coord(ix, iy);
        std::string prefix = g17(c.lon) + "," + g17(c.lat) + "," +
                             std::to_string(tag.year) + "," +
                             std::to_string(tag.month);
        ssp_out << prefix;
        for (double s : cell->profile.speeds) ssp_out << "," << g17(s);
        ssp_out << "\n";
        sst_out << prefix << "," << g17(cell->sst) << "\n";
      }
  }
  if (!ssp_out.flush()) throw IoError("write failed: " + ssp_path);
  if (!sst_out.flush()) throw IoError("write failed: " + sst_path);
}

SampleSplit build_samples(const GridField& field, const SplitSpec& split) {
  if (split.train_end.index() < split.train_begin.index() ||
      split.test_end.index() < split.test_begin.index())
    throw ConfigError("split range ends before it begins");
  if (split.train_begin.index() <= split.test_end.index() &&
      split.test_begin.index() <= split.train_end.index())
    throw ConfigError("train and test month ranges overlap");
  int stride = static_cast<int>(std::llround(split.train_stride_deg / field.cell_deg));
  int offset = static_cast<int>(std::llround(split.test_offset_deg / field.cell_deg));
  if (stride < 1) throw ConfigError("train stride below one cell");

  // Neighbor order is fixed: row-major over the 3x3 window, center skipped.
  static constexpr int kOffsets[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                         {1, 0},   {-1, 1}, {0, 1},  {1, 1}};
  auto on_lattice = [&](int i, int shift) {
    int r = (i - 1 - shift) % stride;
    return (r + stride) % stride == 0;
  };

  SampleSplit out;
  std::set<std::pair<int, int>> train_centers, test_centers;
  for (std::size_t m = 0; m < field.months.size(); ++m) {
    int mi = field.months[m].index();
    bool in_train = mi >= split.train_begin.index() && mi <= split.train_end.index();
    bool in_test = mi >= split.test_begin.index() && mi <= split.test_end.index();
    if (!in_train && !in_test) continue;
    for (int iy = 1; iy + 1 < field.n_lat; ++iy)
      for (int ix = 1; ix + 1 < field.n_lon; ++ix) {
        bool lattice = in_train ? (on_lattice(ix, 0) && on_lattice(iy, 0))
                                : (on_lattice(ix, offset) && on_lattice(iy, offset));
        if (!lattice) continue;
        const auto& center = field.at(static_cast<int>(m), ix, iy);
        if (!center) continue;
        bool complete = true;
        for (auto [dx, dy] : kOffsets)
          if (!field.at(static_cast<int>(m), ix + dx, iy + dy)) {
            complete = false;
            break;
          }
        if (!complete) continue;

        Sample s;
        s.target_coord = field.cell_coord(ix, iy);
        s.target_sst = center->sst;
        s.target_profile = center->profile;
        s.epoch_tag = field.months[m];
        for (auto [dx, dy] : kOffsets) {
          const auto& n = field.at(static_cast<int>(m), ix + dx, iy + dy);
          s.refs.entries.push_back(
              ReferenceEntry{field.cell_coord(ix + dx, iy + dy), n->sst, n->profile});
        }
        if (in_train) {
          train_centers.emplace(ix, iy);
          out.train.push_back(std::move(s));
        } else {
          test_centers.emplace(ix, iy);
          out.test.push_back(std::move(s));
        }
      }
  }

  for (const auto& c : test_centers)
    if (train_centers.count(c))
      throw ConfigError("train and test center lattices intersect at cell (" +
                        std::to_string(c.first) + "," + std::to_string(c.second) + ")");
  if (out.train.empty()) throw EmptySplit("no complete 3x3 window in train months");
  if (out.test.empty()) throw EmptySplit("no complete 3x3 window in test months");
  return out;
}

GridField synthesize_field(std::uint64_t seed, int n_lon, int n_lat, int months,
                           int depth) {
  if (n_lon < 3 || n_lat < 3) throw ConfigError("synthetic field needs a 3x3 grid");
  if (months < 1) throw ConfigError("synthetic field needs at least one month");
  if (depth < 2) throw ConfigError("synthetic field needs at least two depths");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> ufreq(0.6, 1.4);
  std::uniform_real_distribution<double> uslow(0.5, 0.9);
  double p1 = uphase(rng), p2 = uphase(rng), p3 = uphase(rng);
  double p4 = uphase(rng), p5 = uphase(rng), p6 = uphase(rng);
  double f1 = ufreq(rng), f2 = ufreq(rng), f3 = ufreq(rng);
  double f4 = uslow(rng);

  GridField field;
  field.origin = GeoCoordinate{0.5, -59.5};
  field.cell_deg = 1.0;
  field.n_lon = n_lon;
  field.n_lat = n_lat;
  for (int m = 0; m < months; ++m)
    field.months.push_back(MonthTag{2000 + m / 12, m % 12 + 1});
  field.cells.assign(static_cast<std::size_t>(months),
                     std::vector<std::optional<GridCell>>(
                         static_cast<std::size_t>(n_lon) * n_lat));

  for (int m = 0; m < months; ++m) {
    double seasonal = std::sin(2.0 * kPi * m / 12.0 + p1);
    for (int iy = 0; iy < n_lat; ++iy)
      for (int ix = 0; ix < n_lon; ++ix) {
        double u = n_lon > 1 ? static_cast<double>(ix) / (n_lon - 1) : 0.0;
        double v = n_lat > 1 ? static_cast<double>(iy) / (n_lat - 1) : 0.0;
        double sst = 10.0 + 5.0 * v +
                     2.0 * std::sin(2.0 * kPi * f1 * u + p2) *
                         std::cos(2.0 * kPi * f2 * v + p3) +
                     1.5 * seasonal +
                     0.8 * std::sin(2.0 * kPi * f3 * (u + v) + p4);
        double dip_center = 0.30 + 0.06 * std::sin(2.0 * kPi * f4 * u + p5) *
                                       std::cos(2.0 * kPi * f4 * v + p6);
        double dip_amp = 4.0 + 1.2 * std::cos(p6 + 2.0 * kPi * (u - v));
        double eddy_phase = 2.0 * kPi * (1.1 * u - 0.9 * v) + p5 + 0.5 * seasonal;

        GridCell cell;
        cell.sst = sst;
        cell.profile.speeds.resize(static_cast<std::size_t>(depth));
        for (int z = 0; z < depth; ++z) {
          double zn = static_cast<double>(z) / (depth - 1);
          double deep = 1485.0 + 35.0 * zn + 6.0 * zn * zn;
          double thermal = (sst - 10.0) * 1.8 * std::exp(-zn / 0.18);
          double dz = zn - dip_center;
          double dip = -dip_amp * std::exp(-dz * dz / (2.0 * 0.08 * 0.08));
          double eddy = 1.2 * std::sin(eddy_phase) * std::exp(-zn / 0.5);
          cell.profile.speeds[static_cast<std::size_t>(z)] =
              deep + thermal + dip + eddy;
        }
        field.at(m, ix, iy) = std::move(cell);
      }
  }
  return field;
}

}  // namespace sspfield
