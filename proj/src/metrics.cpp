// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/metrics.hpp"

#include <cmath>

namespace relit {

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    double sum = 0;
    double half = (size - 1) / 2.0;
    for (int i = 0; i < size; ++i) {
        double d = i - half;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double &v : k) v /= sum;
    return k;
}

// Separable valid-mode convolution of a single-channel double image.
struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;
    double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
};

Plane convolve_valid(const Plane &img, const std::vector<double> &k) {
    int n = static_cast<int>(k.size());
    Plane horiz{img.w - n + 1, img.h, {}};
    horiz.v.resize(static_cast<size_t>(horiz.w) * horiz.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < horiz.w; ++x) {
            double acc = 0;
            for (int i = 0; i < n; ++i) acc += k[i] * img.at(x + i, y);
            horiz.v[static_cast<size_t>(y) * horiz.w + x] = acc;
        }
    Plane out{horiz.w, img.h - n + 1, {}};
    out.v.resize(static_cast<size_t>(out.w) * out.h);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double acc = 0;
            for (int i = 0; i < n; ++i) acc += k[i] * horiz.at(x, y + i);
            out.v[static_cast<size_t>(y) * out.w + x] = acc;
        }
    return out;
}

Plane luma_plane(const RadianceImage &img) {
    Plane p{img.width(), img.height(), {}};
    p.v.resize(static_cast<size_t>(p.w) * p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x)
            p.v[static_cast<size_t>(y) * p.w + x] =
                std::clamp(luminance(img.rgb(x, y)), 0.0, 1.0);
    return p;
}

Plane multiply(const Plane &a, const Plane &b) {
    Plane out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
    return out;
}

}  // namespace

double ssim(const RadianceImage &a, const RadianceImage &b, const SsimParams &params) {
    if (a.width() != b.width() || a.height() != b.height())
        throw ValidationError("ssim: dimension mismatch");
    if (a.width() < params.window || a.height() < params.window)
        throw ValidationError("ssim: image smaller than the " +
                              std::to_string(params.window) + "x" +
                              std::to_string(params.window) + " window");

    std::vector<double> kernel = gaussian_kernel(params.window, params.sigma);
    Plane x = luma_plane(a);
    Plane y = luma_plane(b);

    Plane mu_x = convolve_valid(x, kernel);
    Plane mu_y = convolve_valid(y, kernel);
    Plane e_xx = convolve_valid(multiply(x, x), kernel);
    Plane e_yy = convolve_valid(multiply(y, y), kernel);
    Plane e_xy = convolve_valid(multiply(x, y), kernel);

    double c1 = params.k1 * params.dynamic_range;
    c1 *= c1;
    double c2 = params.k2 * params.dynamic_range;
    c2 *= c2;

    double acc = 0;
    size_t count = mu_x.v.size();
    for (size_t i = 0; i < count; ++i) {
        double mx = mu_x.v[i], my = mu_y.v[i];
        double var_x = e_xx.v[i] - mx * mx;
        double var_y = e_yy.v[i] - my * my;
        double cov = e_xy.v[i] - mx * my;
        double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        double den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(count);
}

double temporal_ssim(const std::vector<RadianceImage> &seq, const SsimParams &params) {
    if (seq.size() < 2)
        throw ValidationError("temporal_ssim: need at least 2 frames, got " +
                              std::to_string(seq.size()));
    double acc = 0;
    for (size_t t = 0; t + 1 < seq.size(); ++t) acc += ssim(seq[t], seq[t + 1], params);
    return acc / static_cast<double>(seq.size() - 1);
}

double psnr(const RadianceImage &a, const RadianceImage &b, double peak) {
    double err = mse(a, b);
    if (err <= 0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / err));
}

}  // namespace relit
