// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relit/envmap.hpp"
#include "relit/gbuffer.hpp"
#include "relit/image.hpp"
#include "relit/optimize.hpp"
#include "relit/render.hpp"

namespace relit {

// One demonstration: a frame sequence with synchronized proprioception and
// action records plus free-form metadata. Augmentation rewrites frames only;
// proprio/actions pass through bit-identically.
struct Episode {
    std::vector<RadianceImage> frames;               // linear RGB
    std::vector<std::vector<double>> proprio;        // T x p
    std::vector<std::vector<double>> actions;        // T x a
    std::vector<std::pair<std::string, std::string>> meta;

    void validate() const;
};

// Directory layout: frames/000000.png ..., proprio.csv, actions.csv, meta.txt.
// CSV cells are written with 17 significant digits so doubles round-trip
// bit-exactly; frames round-trip up to 8-bit sRGB quantization.
Episode load_episode(const std::string &dir);
void save_episode(const Episode &ep, const std::string &dir);

// Photometric degradation factors, applied episode-wide from one sample so
// frame pairing stays temporally coherent.
struct JitterParams {
    double brightness = 1.0;  // [0.2, 1.9]
    double contrast = 1.0;    // [0.2, 1.9]
    double saturation = 1.0;  // [0.2, 1.9]
    double hue = 0.0;         // [-0.5, 0.5] turns

    void validate() const;
};

// Draws brightness/contrast/saturation from U[0.2, 1.9] and hue from
// U[-0.5, 0.5], deterministically from the seed.
JitterParams sample_jitter(uint64_t seed);

// Applies, in sRGB domain and in this order: brightness scale, contrast about
// the frame's mean luma, saturation toward per-pixel luma, HSV hue rotation.
// Every frame gets the identical transform; proprio/actions are copied.
Episode degrade_episode(const Episode &ep, const JitterParams &params);

// Replaces albedo inside the mask (1-channel, >= 0.5 selects) while keeping
// roughness, metallic, normal and depth bit-identical.
GBuffer swap_albedo(const GBuffer &gbuf, const RadianceImage &segment_mask,
                    const Vec3 &new_albedo);
GBuffer swap_albedo(const GBuffer &gbuf, const RadianceImage &segment_mask,
                    const RadianceImage &new_albedo);

struct AugmentConfig {
    bool refine = false;            // estimate the episode's lighting, then
                                    // refine albedo/roughness against frame 0
    RefineConfig refine_cfg;
    EnvEstimateConfig estimate_cfg;
};

struct AugmentItem {
    bool ok = false;
    Episode episode;    // populated when ok
    std::string error;  // populated when !ok
};

struct AugmentResult {
    std::vector<AugmentItem> items;  // one per environment, input order
    double estimate_seconds = 0;
    double refine_seconds = 0;
    bool estimate_converged = true;
};

// Relights frame 0 under each environment, transfers the lighting change to
// the remaining frames with a quotient map, and emits one episode per
// environment. Property estimation/refinement runs exactly once and is shared
// across environments; a failing environment is reported in its slot without
// aborting the rest.
AugmentResult augment_episode(const Episode &ep, const GBuffer &gbuf,
                              const std::vector<EnvironmentMap> &envs,
                              const RenderSettings &settings,
                              const AugmentConfig &cfg = {});

}  // namespace relit
