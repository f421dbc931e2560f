// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/temporal.hpp"

#include <algorithm>
#include <string>

#include "relit/errors.hpp"

namespace relit {

namespace {

std::string shape_str(const RadianceImage &img) {
    return std::to_string(img.width()) + "x" + std::to_string(img.height()) + "x" +
           std::to_string(img.channels());
}

}  // namespace

QuotientMap quotient_map(const RadianceImage &I0, const RadianceImage &I0_star,
                         double epsilon, double gain_max) {
    if (!I0.same_shape(I0_star))
        throw ValidationError("quotient_map: frame shape mismatch (" + shape_str(I0) +
                              " vs " + shape_str(I0_star) + ")");
    if (epsilon <= 0.0)
        throw ValidationError("quotient_map: epsilon must be positive");
    if (gain_max <= 0.0)
        throw ValidationError("quotient_map: gain_max must be positive");
    I0.validate("quotient_map original frame");
    I0_star.validate("quotient_map relit frame");

    QuotientMap qmap;
    qmap.epsilon = epsilon;
    qmap.gain_max = gain_max;
    qmap.gain = RadianceImage(I0.width(), I0.height(), I0.channels());
    for (size_t i = 0; i < I0.size(); ++i) {
        double g = (double(I0_star.data()[i]) + epsilon) / (double(I0.data()[i]) + epsilon);
        qmap.gain.data()[i] = float(std::clamp(g, 0.0, gain_max));
    }
    return qmap;
}

RadianceImage apply_quotient(const RadianceImage &frame, const QuotientMap &qmap) {
    if (!frame.same_shape(qmap.gain))
        throw ValidationError("apply_quotient: frame shape does not match gain map");
    RadianceImage out(frame.width(), frame.height(), frame.channels());
    for (size_t i = 0; i < frame.size(); ++i)
        out.data()[i] = frame.data()[i] * qmap.gain.data()[i];
    return out;
}

std::vector<RadianceImage> propagate(const std::vector<RadianceImage> &frames,
                                     const QuotientMap &qmap) {
    if (frames.empty())
        throw ValidationError("propagate: empty frame sequence");
    std::vector<RadianceImage> out;
    out.reserve(frames.size());
    for (size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].same_shape(qmap.gain))
            throw ValidationError("propagate: frame " + std::to_string(i) +
                                  " shape does not match gain map");
        out.push_back(apply_quotient(frames[i], qmap));
    }
    return out;
}

}  // namespace relit
