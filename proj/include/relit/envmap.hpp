// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "relit/image.hpp"

namespace relit {

// Equirectangular mapping, y-up: u = atan2(dx, -dz)/(2pi) + 0.5,
// v = acos(dy)/pi (v = 0 at the zenith). u wraps, v clamps.
void dir_to_uv(const Vec3 &dir, double &u, double &v);
Vec3 uv_to_dir(double u, double v);

struct LightSample {
    Vec3 dir;       // unit direction toward the light
    Vec3 radiance;  // radiance of the sampled texel (nearest lookup)
    double pdf;     // solid-angle pdf
};

// Equirectangular HDR radiance with luminance-weighted sampling tables.
// Immutable once built; safe to share across threads.
class EnvironmentMap {
  public:
    EnvironmentMap() = default;

    // Builds per-row (marginal) and per-texel (conditional) CDFs over
    // luminance * sin(theta at texel center). An all-zero map is flagged
    // degenerate; callers fall back to cosine sampling.
    static EnvironmentMap build_sampling_tables(const RadianceImage &radiance);

    static EnvironmentMap load(const std::string &pfm_path);
    void save(const std::string &pfm_path) const;

    const RadianceImage &radiance() const { return radiance_; }
    int width() const { return radiance_.width(); }
    int height() const { return radiance_.height(); }
    bool degenerate() const { return total_weight_ <= 0; }
    double total_weight() const { return total_weight_; }

    // Bilinear radiance lookup at dir (u wraps, v clamps).
    Vec3 sample_radiance(const Vec3 &dir) const;

    // Inverts the marginal then conditional CDF; the direction is drawn
    // uniformly in solid angle within the selected texel. The pdf is the
    // per-texel constant weight / (total_weight * texel_solid_angle), which
    // is exactly the density of that draw. Throws on a degenerate map.
    LightSample sample_light(double u1, double u2) const;

    // Solid-angle pdf that sample_light assigns to dir's (nearest) texel.
    // Returns 0 for a degenerate map.
    double pdf_light(const Vec3 &dir) const;

    // Exact solid angle of a texel in row y:
    // (2pi/W) * (cos(pi*y/H) - cos(pi*(y+1)/H)).
    double texel_solid_angle(int y) const;

  private:
    RadianceImage radiance_;
    std::vector<double> marginal_cdf_;              // H entries, ends at 1
    std::vector<double> conditional_cdf_;           // H*W entries, each row ends at 1
    std::vector<double> row_weight_;                // per-row weight sums
    std::vector<double> weight_;                    // per-texel weights
    double total_weight_ = 0;
};

}  // namespace relit
