// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <vector>

#include "relit/image.hpp"

namespace relit {

struct SsimParams {
    int window = 11;       // Gaussian window size
    double sigma = 1.5;    // Gaussian sigma
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

// Structural similarity between two images, computed on Rec. 709 luma
// clamped to [0,1], averaged over valid (fully interior) window positions.
// Symmetric in (a, b); returns exactly 1 for identical inputs.
double ssim(const RadianceImage &a, const RadianceImage &b, const SsimParams &params = {});

// Mean SSIM over consecutive frame pairs; requires at least 2 frames.
double temporal_ssim(const std::vector<RadianceImage> &seq, const SsimParams &params = {});

// Peak signal-to-noise ratio in dB. Identical images report the 99 dB cap.
double psnr(const RadianceImage &a, const RadianceImage &b, double peak = 1.0);

constexpr double kPsnrCap = 99.0;

}  // namespace relit
