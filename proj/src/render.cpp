// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/render.hpp"

#include <cmath>
#include <utility>

#include "relit/parallel.hpp"

namespace relit {

Vec3 pixel_view_dir(const Intrinsics &K, int x, int y) {
    // Point direction in the camera (CV) frame, then flip into the shading
    // frame (negate the toward-surface vector and the y/z axis handedness).
    Vec3 p = K.unproject(x, y, 1.0);
    Vec3 toward_camera_cv = -p;
    Vec3 v(toward_camera_cv.x, -toward_camera_cv.y, -toward_camera_cv.z);
    return normalize(v);
}

Vec3 sample_cosine_hemisphere(const Vec3 &n, double u1, double u2) {
    double r = std::sqrt(u1);
    double phi = kTwoPi * u2;
    double lx = r * std::cos(phi);
    double ly = r * std::sin(phi);
    double lz = std::sqrt(std::max(0.0, 1.0 - u1));
    Vec3 t, b;
    orthonormal_basis(n, t, b);
    return t * lx + b * ly + n * lz;
}

namespace {

// Scalar diffuse factor s such that the diffuse lobe is albedo * s, plus the
// specular lobe with F0 frozen at mat.albedo.
struct LobeEval {
    double diffuse_scale = 0;
    Vec3 specular;
};

// Fixed 4x4 jittered stratification of the unit square. Every block of 16
// consecutive samples covers each stratum exactly once in a freshly shuffled
// order, so every individual sample is still uniform on [0,1)^2 and any spp
// stays unbiased; the stratification only lowers the variance constant. The
// grid never grows with spp, which keeps the 1/spp variance scaling intact.
class StratifiedSquare {
  public:
    explicit StratifiedSquare(Pcg32 &rng) : rng_(rng) {}

    void next(double &u1, double &u2) {
        if (pos_ == 16) pos_ = 0;
        if (pos_ == 0) {
            for (int i = 0; i < 16; ++i) order_[i] = i;
            for (int i = 15; i > 0; --i) {
                int j = static_cast<int>(rng_.next_u32() % static_cast<uint32_t>(i + 1));
                std::swap(order_[i], order_[j]);
            }
        }
        int cell = order_[pos_++];
        u1 = ((cell & 3) + rng_.next_double()) * 0.25;
        u2 = ((cell >> 2) + rng_.next_double()) * 0.25;
    }

  private:
    Pcg32 &rng_;
    int order_[16];
    int pos_ = 0;
};

LobeEval eval_lobes(const MaterialSample &mat, const Vec3 &n, const Vec3 &l, const Vec3 &v,
                    BrdfMode mode) {
    LobeEval out;
    double n_dot_l = dot(n, l);
    double n_dot_v = dot(n, v);
    if (n_dot_l <= 0 || n_dot_v <= 0) return out;
    if (mode == BrdfMode::Lambert) {
        out.diffuse_scale = kInvPi;
        return out;
    }
    Vec3 h = normalize(l + v);
    double cos_d = std::clamp(dot(h, l), 0.0, 1.0);
    double fd90 = 0.5 + 2.0 * mat.roughness * cos_d * cos_d;
    auto fd = [fd90](double cos_t) {
        double p = 1.0 - std::clamp(cos_t, 0.0, 1.0);
        double p2 = p * p;
        return 1.0 + (fd90 - 1.0) * p2 * p2 * p;
    };
    out.diffuse_scale = (1.0 - mat.metallic) * kInvPi * fd(n_dot_l) * fd(n_dot_v);
    out.specular = ggx_specular(mat, n, l, v);
    return out;
}

}  // namespace

ShadeSplit shade_point_split(const MaterialSample &mat, const Vec3 &n, const Vec3 &v,
                             const EnvironmentMap &env, const RenderSettings &settings,
                             Pcg32 &rng) {
    settings.validate();
    bool env_strategy = settings.sampler != SamplerKind::CosineOnly && !env.degenerate();
    bool cos_strategy = settings.sampler != SamplerKind::EnvOnly;
    if (settings.sampler == SamplerKind::EnvOnly && env.degenerate())
        throw ValidationError("shade_point: degenerate environment map with cosine fallback disabled");

    Vec3 diffuse_acc(0.0), specular_acc(0.0);
    StratifiedSquare env_points(rng), cos_points(rng);
    for (int s = 0; s < settings.spp; ++s) {
        if (env_strategy) {
            double u1, u2;
            env_points.next(u1, u2);
            LightSample ls = env.sample_light(u1, u2);
            double cos_l = dot(n, ls.dir);
            if (ls.pdf > 0 && cos_l > 0) {
                LobeEval lobes = eval_lobes(mat, n, ls.dir, v, settings.mode);
                double w = 1.0;
                if (settings.sampler == SamplerKind::Mis && cos_strategy) {
                    double pdf_cos = cos_l * kInvPi;
                    w = ls.pdf / (ls.pdf + pdf_cos);
                }
                // Bilinear radiance for shading; the pdf stays the
                // nearest-texel value that sample_light reported.
                Vec3 L = env.sample_radiance(ls.dir) * settings.exposure;
                double k = cos_l * w / ls.pdf;
                diffuse_acc += L * (lobes.diffuse_scale * k);
                specular_acc += lobes.specular * L * k;
            }
        }
        if (cos_strategy) {
            double u1, u2;
            cos_points.next(u1, u2);
            Vec3 dir = sample_cosine_hemisphere(n, u1, u2);
            double cos_l = dot(n, dir);
            double pdf_cos = cos_l * kInvPi;
            if (pdf_cos > 0) {
                LobeEval lobes = eval_lobes(mat, n, dir, v, settings.mode);
                double w = 1.0;
                if (settings.sampler == SamplerKind::Mis && env_strategy)
                    w = pdf_cos / (pdf_cos + env.pdf_light(dir));
                Vec3 L = env.sample_radiance(dir) * settings.exposure;
                double k = cos_l * w / pdf_cos;
                diffuse_acc += L * (lobes.diffuse_scale * k);
                specular_acc += lobes.specular * L * k;
            }
        }
    }
    ShadeSplit out;
    out.diffuse_coef = diffuse_acc / static_cast<double>(settings.spp);
    out.specular = specular_acc / static_cast<double>(settings.spp);
    return out;
}

Vec3 shade_point(const MaterialSample &mat, const Vec3 &n, const Vec3 &v,
                 const EnvironmentMap &env, const RenderSettings &settings, Pcg32 &rng) {
    ShadeSplit split = shade_point_split(mat, n, v, env, settings, rng);
    return split.diffuse_coef * mat.albedo + split.specular;
}

namespace {

MaterialSample material_at(const GBuffer &gbuf, int x, int y) {
    MaterialSample mat;
    mat.albedo = gbuf.albedo.rgb(x, y);
    mat.roughness = gbuf.roughness.at(x, y);
    mat.metallic = gbuf.metallic.at(x, y);
    return mat;
}

}  // namespace

Vec3 shade_pixel(const GBuffer &gbuf, int x, int y, const EnvironmentMap &env,
                 const RenderSettings &settings, uint64_t seed_offset) {
    if (x < 0 || x >= gbuf.width() || y < 0 || y >= gbuf.height())
        throw ValidationError("shade_pixel: pixel out of bounds");
    Pcg32 rng = pixel_rng(settings.seed, x, y, seed_offset);
    Vec3 n = gbuf.normal_at(x, y);
    Vec3 v = pixel_view_dir(gbuf.intrinsics, x, y);
    return shade_point(material_at(gbuf, x, y), n, v, env, settings, rng);
}

RadianceImage relight_frame(const GBuffer &gbuf, const EnvironmentMap &env,
                            const RenderSettings &settings) {
    settings.validate();
    int w = gbuf.width(), h = gbuf.height();
    RadianceImage out(w, h, 3);
    parallel_for(0, h, settings.threads, [&](int64_t y) {
        for (int x = 0; x < w; ++x)
            out.set_rgb(x, static_cast<int>(y),
                        shade_pixel(gbuf, x, static_cast<int>(y), env, settings));
    });
    return out;
}

void relight_frame_split(const GBuffer &gbuf, const EnvironmentMap &env,
                         const RenderSettings &settings, RadianceImage &diffuse_coef,
                         RadianceImage &specular) {
    settings.validate();
    int w = gbuf.width(), h = gbuf.height();
    diffuse_coef = RadianceImage(w, h, 3);
    specular = RadianceImage(w, h, 3);
    parallel_for(0, h, settings.threads, [&](int64_t yy) {
        int y = static_cast<int>(yy);
        for (int x = 0; x < w; ++x) {
            Pcg32 rng = pixel_rng(settings.seed, x, y);
            Vec3 n = gbuf.normal_at(x, y);
            Vec3 v = pixel_view_dir(gbuf.intrinsics, x, y);
            ShadeSplit split =
                shade_point_split(material_at(gbuf, x, y), n, v, env, settings, rng);
            diffuse_coef.set_rgb(x, y, split.diffuse_coef);
            specular.set_rgb(x, y, split.specular);
        }
    });
}

}  // namespace relit
