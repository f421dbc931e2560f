// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/image.hpp"

#include <cmath>

namespace relit {

RadianceImage::RadianceImage(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
        throw ValidationError("RadianceImage: bad shape " + std::to_string(width) + "x" +
                              std::to_string(height) + "x" + std::to_string(channels));
    data_.assign(static_cast<size_t>(width) * height * channels, fill);
}

void RadianceImage::validate(const std::string &what) const {
    for (float v : data_) {
        if (!std::isfinite(v))
            throw ValidationError(what + ": non-finite pixel value");
        if (v < 0.f)
            throw ValidationError(what + ": negative pixel value");
    }
}

double srgb_decode(double v) {
    v = std::clamp(v, 0.0, 1.0);
    if (v <= 0.04045) return v / 12.92;
    return std::pow((v + 0.055) / 1.055, 2.4);
}

double srgb_encode(double v) {
    v = std::clamp(v, 0.0, 1.0);
    // The analytic value at v = 1 is exactly 1, but the expression below
    // rounds to one ulp under 1; pin the endpoint.
    if (v == 1.0) return 1.0;
    if (v <= 0.0031308) return v * 12.92;
    return std::min(1.0, 1.055 * std::pow(v, 1.0 / 2.4) - 0.055);
}

RadianceImage to_luma(const RadianceImage &img) {
    RadianceImage out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(x, y) = static_cast<float>(std::clamp(luminance(img.rgb(x, y)), 0.0, 1.0));
    return out;
}

static void require_same_shape(const RadianceImage &a, const RadianceImage &b,
                               const char *op) {
    if (!a.same_shape(b))
        throw ValidationError(std::string(op) + ": shape mismatch " +
                              std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                              "x" + std::to_string(a.channels()) + " vs " +
                              std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                              "x" + std::to_string(b.channels()));
}

RadianceImage add(const RadianceImage &a, const RadianceImage &b) {
    require_same_shape(a, b, "add");
    RadianceImage out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

RadianceImage sub(const RadianceImage &a, const RadianceImage &b) {
    require_same_shape(a, b, "sub");
    RadianceImage out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

RadianceImage scale(const RadianceImage &a, double s) {
    RadianceImage out = a;
    for (float &v : out.data()) v = static_cast<float>(v * s);
    return out;
}

double mse(const RadianceImage &a, const RadianceImage &b) {
    require_same_shape(a, b, "mse");
    double acc = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a.data()[i]) - b.data()[i];
        acc += d * d;
    }
    return a.size() ? acc / static_cast<double>(a.size()) : 0.0;
}

}  // namespace relit
