#include "sspfield/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "sspfield/errors.hpp"

namespace sspfield {

NormStats normalize_stats(const std::vector<Sample>& train) {
  if (train.empty()) throw EmptyDataset("cannot fit normalization on zero samples");
  std::size_t depth = train.front().refs.depth_count();
  if (depth == 0) throw EmptyDataset("training samples carry no references");

  NormStats stats;
  stats.depth_mean.assign(depth, 0.0);
  stats.depth_std.assign(depth, 0.0);

  // Two-pass, fixed iteration order: refs first, then the labeled target.
  std::size_t n_profiles = 0, n_scalars = 0;
  double sst_sum = 0.0;
  bool first_coord = true;
  auto eat_coord = [&](const GeoCoordinate& c) {
    if (first_coord) {
      stats.lon_min = stats.lon_max = c.lon;
      stats.lat_min = stats.lat_max = c.lat;
      first_coord = false;
    } else {
      stats.lon_min = std::min(stats.lon_min, c.lon);
      stats.lon_max = std::max(stats.lon_max, c.lon);
      stats.lat_min = std::min(stats.lat_min, c.lat);
      stats.lat_max = std::max(stats.lat_max, c.lat);
    }
  };
  auto eat_profile = [&](const SoundSpeedProfile& p) {
    if (p.size() != depth)
      throw ShapeError("profile depth mismatch while fitting normalization");
    for (std::size_t i = 0; i < depth; ++i) stats.depth_mean[i] += p.speeds[i];
    ++n_profiles;
  };
  for (const Sample& s : train) {
    for (const ReferenceEntry& r : s.refs.entries) {
      eat_profile(r.profile);
      sst_sum += r.sst;
      ++n_scalars;
      eat_coord(r.coord);
    }
    if (s.target_profile) eat_profile(*s.target_profile);
    sst_sum += s.target_sst;
    ++n_scalars;
    eat_coord(s.target_coord);
  }
  for (double& m : stats.depth_mean) m /= static_cast<double>(n_profiles);
  stats.sst_mean = sst_sum / static_cast<double>(n_scalars);

  double sst_var = 0.0;
  auto eat_profile_var = [&](const SoundSpeedProfile& p) {
    for (std::size_t i = 0; i < depth; ++i) {
      double d = p.speeds[i] - stats.depth_mean[i];
      stats.depth_std[i] += d * d;
    }
  };
  for (const Sample& s : train) {
    for (const ReferenceEntry& r : s.refs.entries) {
      eat_profile_var(r.profile);
      double d = r.sst - stats.sst_mean;
      sst_var += d * d;
    }
    if (s.target_profile) eat_profile_var(*s.target_profile);
    double d = s.target_sst - stats.sst_mean;
    sst_var += d * d;
  }
  for (double& v : stats.depth_std)
    v = std::max(std::sqrt(v / static_cast<double>(n_profiles)), 1e-6);
  stats.sst_std = std::max(std::sqrt(sst_var / static_cast<double>(n_scalars)), 1e-6);
  return stats;
}

NormalizedSample apply_norm(const Sample& sample, const NormStats& stats) {
  std::size_t depth = stats.depth();
  if (sample.refs.depth_count() != depth)
    throw ShapeError("sample depth does not match normalization statistics");

  NormalizedSample out;
  out.n_refs = static_cast<int>(sample.refs.size());
  out.depth = static_cast<int>(depth);
  out.target_label = {stats.norm_lon(sample.target_coord.lon),
                      stats.norm_lat(sample.target_coord.lat),
                      stats.norm_sst(sample.target_sst)};
  out.ref_coords.reserve(sample.refs.size() * 2);
  out.ref_ssts.reserve(sample.refs.size());
  out.ref_profiles.reserve(sample.refs.size() * depth);
  for (const ReferenceEntry& r : sample.refs.entries) {
    out.ref_coords.push_back(stats.norm_lon(r.coord.lon));
    out.ref_coords.push_back(stats.norm_lat(r.coord.lat));
    out.ref_ssts.push_back(stats.norm_sst(r.sst));
    for (std::size_t i = 0; i < depth; ++i)
      out.ref_profiles.push_back(stats.norm_speed(i, r.profile.speeds[i]));
  }

  SoundSpeedProfile mean = mean_reference_profile(sample.refs);
  out.ref_mean_phys = mean.speeds;
  out.ref_mean_norm.resize(depth);
  for (std::size_t i = 0; i < depth; ++i)
    out.ref_mean_norm[i] = stats.norm_speed(i, mean.speeds[i]);

  if (sample.target_profile) {
    if (sample.target_profile->size() != depth)
      throw ShapeError("target profile depth does not match references");
    out.target_phys = sample.target_profile->speeds;
    out.target_norm.resize(depth);
    for (std::size_t i = 0; i < depth; ++i)
      out.target_norm[i] = stats.norm_speed(i, out.target_phys[i]);
  }
  return out;
}

std::vector<NormalizedSample> apply_norm(const std::vector<Sample>& samples,
                                         const NormStats& stats) {
  std::vector<NormalizedSample> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(apply_norm(s, stats));
  return out;
}

}  // namespace sspfield
