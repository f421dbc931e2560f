// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>

#include "relit/brdf.hpp"
#include "relit/envmap.hpp"
#include "relit/gbuffer.hpp"
#include "relit/rng.hpp"

namespace relit {

enum class SamplerKind { Mis, EnvOnly, CosineOnly };

struct RenderSettings {
    int spp = 256;
    BrdfMode mode = BrdfMode::Disney;
    SamplerKind sampler = SamplerKind::Mis;
    uint64_t seed = 0;
    double exposure = 1.0;  // multiplier on environment radiance
    int threads = 0;        // 0 = machine parallelism

    void validate() const {
        if (spp < 1) throw ValidationError("RenderSettings: spp must be >= 1");
        if (!(exposure > 0)) throw ValidationError("RenderSettings: exposure must be > 0");
    }
};

// View direction (unit, toward the camera) for a pixel, expressed in the
// shading frame (x right, y up, +z toward camera). Depth cancels out.
Vec3 pixel_view_dir(const Intrinsics &K, int x, int y);

// Cosine-weighted hemisphere direction around n; pdf is cos(theta)/pi.
Vec3 sample_cosine_hemisphere(const Vec3 &n, double u1, double u2);

// Monte Carlo estimate of the hemisphere integral of brdf * radiance * cos
// at one shading point. MIS combines environment importance sampling with
// cosine sampling via the balance heuristic; a degenerate environment map
// silently falls back to cosine sampling (EnvOnly instead throws). Each
// strategy draws its 2-D sample points from a fixed 4x4 jittered
// stratification of the unit square, which lowers the variance constant
// while preserving the 1/spp variance rate.
Vec3 shade_point(const MaterialSample &mat, const Vec3 &n, const Vec3 &v,
                 const EnvironmentMap &env, const RenderSettings &settings, Pcg32 &rng);

// Same estimator, split so the result is affine in albedo with the specular
// F0 frozen at mat.albedo: radiance = diffuse_coef * albedo + specular.
struct ShadeSplit {
    Vec3 diffuse_coef;
    Vec3 specular;
};
ShadeSplit shade_point_split(const MaterialSample &mat, const Vec3 &n, const Vec3 &v,
                             const EnvironmentMap &env, const RenderSettings &settings,
                             Pcg32 &rng);

// Shades pixel (x, y) of the G-buffer. Deterministic given
// (settings.seed, x, y, seed_offset); independent of evaluation order.
Vec3 shade_pixel(const GBuffer &gbuf, int x, int y, const EnvironmentMap &env,
                 const RenderSettings &settings, uint64_t seed_offset = 0);

// Per-pixel relighting of the whole frame. Bitwise identical across runs
// and across any thread count for a fixed seed.
RadianceImage relight_frame(const GBuffer &gbuf, const EnvironmentMap &env,
                            const RenderSettings &settings);

// Split variant used by the property-refinement solver; the full frame is
// diffuse_coef * albedo + specular, channelwise.
void relight_frame_split(const GBuffer &gbuf, const EnvironmentMap &env,
                         const RenderSettings &settings, RadianceImage &diffuse_coef,
                         RadianceImage &specular);

}  // namespace relit
