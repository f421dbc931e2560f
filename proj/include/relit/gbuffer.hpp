// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "relit/image.hpp"

namespace relit {

// Pinhole intrinsics with zero skew.
struct Intrinsics {
    double fx = 1, fy = 1, cx = 0, cy = 0;

    // Back-projects pixel-center (x+0.5, y+0.5) at depth d. Camera frame is
    // x right, y down, z forward (z positive into the scene).
    Vec3 unproject(double x, double y, double d) const {
        return {(x + 0.5 - cx) / fx * d, (y + 0.5 - cy) / fy * d, d};
    }

    // Forward projection; returns continuous pixel coordinates (not +0.5 shifted back).
    void project(const Vec3 &p, double &px, double &py) const {
        px = fx * p.x / p.z + cx;
        py = fy * p.y / p.z + cy;
    }
};

Intrinsics load_intrinsics(const std::string &path);
void save_intrinsics(const Intrinsics &K, const std::string &path);

// Per-pixel scene decomposition: material (albedo, roughness, metallic) and
// geometry (normal, depth) maps sharing one resolution, plus camera intrinsics.
//
// Stored normals are unit vectors in a right-handed camera frame with
// x right, y up and +z toward the camera; depth is metric z-depth.
struct GBuffer {
    RadianceImage albedo;     // 3ch, [0,1]
    RadianceImage roughness;  // 1ch, [0,1]
    RadianceImage metallic;   // 1ch, [0,1]
    RadianceImage normal;     // 3ch, unit vectors
    RadianceImage depth;      // 1ch, meters, > 0
    Intrinsics intrinsics;

    int width() const { return albedo.width(); }
    int height() const { return albedo.height(); }

    Vec3 normal_at(int x, int y) const { return normal.rgb(x, y); }

    // Checks shapes, ranges, unit normals (renormalizing when the deviation
    // is at most normal_tol) and strictly positive depth. Throws
    // ValidationError otherwise.
    void validate(double normal_tol = 1e-2);
};

// Reads albedo/roughness/metallic/normal/depth (+ intrinsics.txt) from a
// directory. Each map may be stored as .pfm (raw values) or .png; normals in
// PNG form use the (n+1)/2 encoding and are decoded back to unit vectors.
GBuffer load_gbuffer(const std::string &dir);
void save_gbuffer(const GBuffer &g, const std::string &dir);

}  // namespace relit
