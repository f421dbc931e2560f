// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <vector>

#include "relit/envmap.hpp"
#include "relit/gbuffer.hpp"
#include "relit/image.hpp"
#include "relit/render.hpp"

namespace relit {

// Property-refinement solver settings. The objective is
// mse(render, target) + delta * (sum of mean squared deviations of the five
// property maps from their initial values).
struct RefineConfig {
    double delta = 0.1;      // consistency weight, >= 0
    int iterations = 200;    // outer optimizer steps (0 = no-op)
    double step_size = 0.05; // initial gradient step, halved on backtracking
    int spp_inner = 64;      // samples per pixel for loss renders

    void validate() const {
        if (delta < 0) throw ValidationError("RefineConfig: delta must be >= 0");
        if (iterations < 0) throw ValidationError("RefineConfig: iterations must be >= 0");
        if (!(step_size > 0)) throw ValidationError("RefineConfig: step_size must be > 0");
        if (spp_inner < 1) throw ValidationError("RefineConfig: spp_inner must be >= 1");
    }
};

// Single-view environment estimation settings.
struct EnvEstimateConfig {
    int env_width = 32;
    int env_height = 16;
    double ridge = 1e-3;  // Tikhonov weight on the texel intensities
    int max_iters = 500;
    double tol = 1e-4;    // relative objective-decrease stop

    void validate() const {
        if (env_width < 1 || env_height < 1)
            throw ValidationError("EnvEstimateConfig: resolution must be positive");
        if (ridge < 0) throw ValidationError("EnvEstimateConfig: ridge must be >= 0");
        if (max_iters < 1) throw ValidationError("EnvEstimateConfig: max_iters must be >= 1");
        if (!(tol > 0)) throw ValidationError("EnvEstimateConfig: tol must be > 0");
    }
};

// Shading is linear in the environment: I(x,y) = sum_j E_j * B_j(x,y), where
// B_j integrates brdf * clamped-cosine over texel j's solid angle. The
// integral uses deterministic quadrature: subdivisions^2 sub-texels, each
// approximated by its center direction times its solid angle. One 3-channel
// image per texel, texels in row-major order. env resolution is capped at
// 64x32 (the basis is dense in both pixels and texels).
std::vector<RadianceImage> transport_basis(const GBuffer &gbuf, int env_width,
                                           int env_height, const RenderSettings &settings,
                                           int subdivisions = 2);

struct EnvEstimateResult {
    EnvironmentMap env;
    double relative_residual = 0; // ||basis*E - frame|| / ||frame||
    int iterations = 0;
    bool converged = true;        // false = stopped at max_iters
};

// Recovers an environment map from one frame and its G-buffer by solving the
// nonnegative ridge least-squares problem
//   min_{E >= 0} ||sum_j E_j B_j - frame||^2 + ridge ||E||^2   (per channel)
// with projected gradient descent. Exposure is pinned to 1 during estimation
// (a global scale between exposure and E is unobservable). An all-zero frame
// yields the all-zero (degenerate) map.
EnvEstimateResult estimate_envmap(const GBuffer &gbuf, const RadianceImage &frame,
                                  const EnvEstimateConfig &cfg,
                                  const RenderSettings &settings = RenderSettings{});

// Reconstruction + consistency objective: mse(rendered, target) + delta *
// (mse of albedo, roughness, metallic, normal and depth against their initial
// maps, summed).
double loss_lp(const RadianceImage &rendered, const RadianceImage &target,
               const GBuffer &props, const GBuffer &props_init, double delta);

// Per-pixel gradients of the refinement objective (pixel-count times the
// derivative of the global mean, so step sizes are resolution-independent).
// The albedo gradient is analytic — shading is affine in albedo once the
// specular F0 is frozen at the initial albedo; the roughness gradient uses
// central finite differences with h = 1e-2.
struct RefineGradients {
    RadianceImage albedo;     // 3ch
    RadianceImage roughness;  // 1ch
};
RefineGradients refine_gradients(const GBuffer &cur, const GBuffer &init,
                                 const RadianceImage &frame, const EnvironmentMap &env,
                                 const RefineConfig &cfg, const RenderSettings &settings);

struct RefineResult {
    GBuffer gbuf;
    std::vector<double> loss_trace; // initial loss, then one entry per accepted step
    bool stalled = false;           // backtracking hit its halving limit
};

// Projected gradient descent on albedo and roughness (normals, depth and
// metallic stay fixed); each step backtracks (up to 8 halvings) until the
// objective does not increase, so the loss trace is nonincreasing. Renders
// use a fixed seed, making the objective deterministic.
RefineResult refine_properties(const GBuffer &gbuf_init, const RadianceImage &frame,
                               const EnvironmentMap &env, const RefineConfig &cfg,
                               const RenderSettings &settings = RenderSettings{});

}  // namespace relit
