// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/envmap.hpp"

#include <cmath>

#include "relit/image_io.hpp"

namespace relit {

void dir_to_uv(const Vec3 &dir, double &u, double &v) {
    double len = length(dir);
    if (len <= 0) throw ValidationError("dir_to_uv: zero direction");
    u = std::atan2(dir.x, -dir.z) / kTwoPi + 0.5;
    if (u >= 1.0) u -= 1.0;
    if (u < 0.0) u += 1.0;
    v = std::acos(std::clamp(dir.y / len, -1.0, 1.0)) / kPi;
}

Vec3 uv_to_dir(double u, double v) {
    double phi = (u - 0.5) * kTwoPi;
    double theta = v * kPi;
    double st = std::sin(theta);
    return {st * std::sin(phi), std::cos(theta), -st * std::cos(phi)};
}

EnvironmentMap EnvironmentMap::build_sampling_tables(const RadianceImage &radiance) {
    if (radiance.empty() || radiance.channels() != 3)
        throw ValidationError("build_sampling_tables: need a non-empty 3-channel map");
    for (float f : radiance.data())
        if (!std::isfinite(f) || f < 0.f)
            throw ValidationError("build_sampling_tables: radiance must be finite and >= 0");

    EnvironmentMap env;
    env.radiance_ = radiance;
    int w = radiance.width(), h = radiance.height();
    env.weight_.resize(static_cast<size_t>(w) * h);
    env.row_weight_.resize(h);
    env.marginal_cdf_.resize(h);
    env.conditional_cdf_.resize(static_cast<size_t>(w) * h);

    for (int y = 0; y < h; ++y) {
        double sin_theta = std::sin(kPi * (y + 0.5) / h);
        double row_sum = 0;
        for (int x = 0; x < w; ++x) {
            double wgt = luminance(radiance.rgb(x, y)) * sin_theta;
            env.weight_[static_cast<size_t>(y) * w + x] = wgt;
            row_sum += wgt;
        }
        env.row_weight_[y] = row_sum;
        env.total_weight_ += row_sum;
        double acc = 0;
        for (int x = 0; x < w; ++x) {
            acc += env.weight_[static_cast<size_t>(y) * w + x];
            env.conditional_cdf_[static_cast<size_t>(y) * w + x] =
                row_sum > 0 ? acc / row_sum : (x + 1.0) / w;
        }
        if (row_sum > 0) env.conditional_cdf_[static_cast<size_t>(y) * w + w - 1] = 1.0;
    }

    double acc = 0;
    for (int y = 0; y < h; ++y) {
        acc += env.row_weight_[y];
        env.marginal_cdf_[y] = env.total_weight_ > 0 ? acc / env.total_weight_ : (y + 1.0) / h;
    }
    if (env.total_weight_ > 0) env.marginal_cdf_[h - 1] = 1.0;
    return env;
}

EnvironmentMap EnvironmentMap::load(const std::string &pfm_path) {
    return build_sampling_tables(load_pfm(pfm_path));
}

void EnvironmentMap::save(const std::string &pfm_path) const {
    save_pfm(radiance_, pfm_path);
}

Vec3 EnvironmentMap::sample_radiance(const Vec3 &dir) const {
    double u, v;
    dir_to_uv(dir, u, v);
    int w = width(), h = height();
    // Texel centers sit at (x+0.5)/w; wrap horizontally, clamp vertically.
    double fx = u * w - 0.5;
    double fy = v * h - 0.5;
    int x0 = static_cast<int>(std::floor(fx));
    int y0 = static_cast<int>(std::floor(fy));
    double tx = fx - x0;
    double ty = fy - y0;
    int x1 = x0 + 1;
    int y1 = y0 + 1;
    auto wrap_x = [w](int x) { return (x % w + w) % w; };
    auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };
    Vec3 c00 = radiance_.rgb(wrap_x(x0), clamp_y(y0));
    Vec3 c10 = radiance_.rgb(wrap_x(x1), clamp_y(y0));
    Vec3 c01 = radiance_.rgb(wrap_x(x0), clamp_y(y1));
    Vec3 c11 = radiance_.rgb(wrap_x(x1), clamp_y(y1));
    return lerp(lerp(c00, c10, tx), lerp(c01, c11, tx), ty);
}

double EnvironmentMap::texel_solid_angle(int y) const {
    // Exact: azimuth span times the integral of sin(theta) over the row's
    // polar range. sample_light draws directions uniformly in solid angle
    // within the texel, so its pdf must divide by this exact area — the
    // sin(theta_center) midpoint approximation would bias env-sampled
    // contributions by a few percent on coarse maps.
    double c0 = std::cos(kPi * y / height());
    double c1 = std::cos(kPi * (y + 1) / height());
    return (kTwoPi / width()) * (c0 - c1);
}

namespace {

// First index with cdf[i] > u; the remainder (u - prev)/(cdf[i] - prev) is
// again uniform and reused for the within-cell offset.
int invert_cdf(const double *cdf, int n, double u, double &remainder) {
    int lo = 0, hi = n - 1;
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (cdf[mid] > u)
            hi = mid;
        else
            lo = mid + 1;
    }
    double prev = lo > 0 ? cdf[lo - 1] : 0.0;
    double width = cdf[lo] - prev;
    // Keep the offset strictly inside the cell so the sampled direction
    // always maps back to this texel under nearest lookup.
    remainder = width > 0 ? std::clamp((u - prev) / width, 0.0, 1.0 - 1e-9) : 0.5;
    return lo;
}

}  // namespace

LightSample EnvironmentMap::sample_light(double u1, double u2) const {
    if (degenerate())
        throw ValidationError("sample_light: degenerate (all-zero) environment map");
    int w = width(), h = height();

    double r1, r2;
    int y = invert_cdf(marginal_cdf_.data(), h, std::clamp(u1, 0.0, 1.0 - 1e-12), r1);
    int x = invert_cdf(conditional_cdf_.data() + static_cast<size_t>(y) * w, w,
                       std::clamp(u2, 0.0, 1.0 - 1e-12), r2);

    // Uniform in solid angle within the texel: phi uniform, cos(theta) uniform.
    double phi0 = (static_cast<double>(x) / w - 0.5) * kTwoPi;
    double phi = phi0 + r2 * (kTwoPi / w);
    double cos0 = std::cos(kPi * y / h);
    double cos1 = std::cos(kPi * (y + 1) / h);
    double cos_theta = cos0 + r1 * (cos1 - cos0);
    double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));

    LightSample s;
    s.dir = Vec3(sin_theta * std::sin(phi), cos_theta, -sin_theta * std::cos(phi));
    s.radiance = radiance_.rgb(x, y);
    s.pdf = weight_[static_cast<size_t>(y) * w + x] /
            (total_weight_ * texel_solid_angle(y));
    return s;
}

double EnvironmentMap::pdf_light(const Vec3 &dir) const {
    if (degenerate()) return 0;
    double u, v;
    dir_to_uv(dir, u, v);
    int w = width(), h = height();
    int x = std::clamp(static_cast<int>(u * w), 0, w - 1);
    int y = std::clamp(static_cast<int>(v * h), 0, h - 1);
    return weight_[static_cast<size_t>(y) * w + x] / (total_weight_ * texel_solid_angle(y));
}

}  // namespace relit
