// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relit/errors.hpp"
#include "relit/vec.hpp"

namespace relit {

// Linear-RGB (or single-channel) image, row-major, top-left origin.
// All pipeline math runs on linear radiance; sRGB transfer is applied only
// at the PNG boundary.
class RadianceImage {
  public:
    RadianceImage() = default;
    RadianceImage(int width, int height, int channels, float fill = 0.f);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    const std::vector<float> &data() const { return data_; }
    std::vector<float> &data() { return data_; }

    float at(int x, int y, int c = 0) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    float &at(int x, int y, int c = 0) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }

    // RGB accessors; single-channel images broadcast their value.
    Vec3 rgb(int x, int y) const {
        if (channels_ == 1) return Vec3(at(x, y));
        return Vec3(at(x, y, 0), at(x, y, 1), at(x, y, 2));
    }
    void set_rgb(int x, int y, const Vec3 &v) {
        if (channels_ == 1) {
            at(x, y) = static_cast<float>(v.x);
        } else {
            at(x, y, 0) = static_cast<float>(v.x);
            at(x, y, 1) = static_cast<float>(v.y);
            at(x, y, 2) = static_cast<float>(v.z);
        }
    }

    bool same_shape(const RadianceImage &o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    // Throws ValidationError if any value is non-finite or negative.
    void validate(const std::string &what) const;

  private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

// Piecewise sRGB EOTF and its inverse. Out-of-range inputs are clamped.
double srgb_decode(double v);
double srgb_encode(double v);

// Per-pixel Rec. 709 luma of a linear image, clamped to [0,1].
RadianceImage to_luma(const RadianceImage &img);

// a + b, a - b, a * scalar; shapes must match.
RadianceImage add(const RadianceImage &a, const RadianceImage &b);
RadianceImage sub(const RadianceImage &a, const RadianceImage &b);
RadianceImage scale(const RadianceImage &a, double s);

// Mean squared error over all pixels and channels.
double mse(const RadianceImage &a, const RadianceImage &b);

}  // namespace relit
