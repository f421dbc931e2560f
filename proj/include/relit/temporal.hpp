// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <vector>

#include "relit/image.hpp"

namespace relit {

// Per-pixel relighting ratio between the relit and original first frame,
// computed and applied in linear light.
struct QuotientMap {
    RadianceImage gain;        // 3ch, values in [0, gain_max]
    double epsilon = 1e-3;
    double gain_max = 8.0;
};

// gain = clamp((I0_star + eps) / (I0 + eps), 0, gain_max), per pixel/channel.
QuotientMap quotient_map(const RadianceImage &I0, const RadianceImage &I0_star,
                         double epsilon = 1e-3, double gain_max = 8.0);

// Applies the gain to every frame (pure per frame; frame 0 is the original
// first frame, so output frame 0 reproduces I0_star up to the epsilon term).
std::vector<RadianceImage> propagate(const std::vector<RadianceImage> &frames,
                                     const QuotientMap &qmap);

// Single-frame form of propagate.
RadianceImage apply_quotient(const RadianceImage &frame, const QuotientMap &qmap);

}  // namespace relit
