// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include "relit/errors.hpp"
#include "relit/vec.hpp"

namespace relit {

struct MaterialSample {
    Vec3 albedo;          // linear RGB, [0,1]
    double roughness = 0; // [0,1]
    double metallic = 0;  // [0,1]
};

enum class BrdfMode { Disney, Lambert };

// Keeps the GGX lobe finite; roughness below this is clamped up.
constexpr double kMinRoughness = 0.03;

inline Vec3 fresnel_schlick(const Vec3 &f0, double cos_theta) {
    double c = std::clamp(cos_theta, 0.0, 1.0);
    double p = 1.0 - c;
    double p2 = p * p;
    double p5 = p2 * p2 * p;
    return f0 + (Vec3(1.0) - f0) * p5;
}

// GGX/Trowbridge-Reitz normal distribution. alpha must be positive; the
// delta limit alpha = 0 is not supported.
inline double ggx_ndf(double alpha, double cos_theta_h) {
    if (alpha <= 0) throw ValidationError("ggx_ndf: alpha must be > 0");
    double c = std::clamp(cos_theta_h, 0.0, 1.0);
    double a2 = alpha * alpha;
    double d = c * c * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

// Schlick-GGX masking-shadowing with k = alpha / 2.
inline double smith_g_schlick(double alpha, double n_dot_l, double n_dot_v) {
    double k = alpha * 0.5;
    double gl = n_dot_l / (n_dot_l * (1.0 - k) + k);
    double gv = n_dot_v / (n_dot_v * (1.0 - k) + k);
    return gl * gv;
}

// Burley diffuse with the retro-reflection term:
// (A/pi) * Fd(theta_l) * Fd(theta_v), Fd(t) = 1 + (FD90-1)(1-cos t)^5,
// FD90 = 0.5 + 2 R cos^2(theta_d), theta_d the half-vector/light angle.
inline Vec3 disney_diffuse(const MaterialSample &mat, const Vec3 &n, const Vec3 &l,
                           const Vec3 &v) {
    double n_dot_l = dot(n, l);
    double n_dot_v = dot(n, v);
    if (n_dot_l <= 0 || n_dot_v <= 0) return Vec3(0.0);
    Vec3 h = normalize(l + v);
    double cos_d = std::clamp(dot(h, l), 0.0, 1.0);
    double fd90 = 0.5 + 2.0 * mat.roughness * cos_d * cos_d;
    auto fd = [fd90](double cos_t) {
        double p = 1.0 - std::clamp(cos_t, 0.0, 1.0);
        double p2 = p * p;
        return 1.0 + (fd90 - 1.0) * p2 * p2 * p;
    };
    return mat.albedo * (kInvPi * fd(n_dot_l) * fd(n_dot_v));
}

// Cook-Torrance GGX specular: D G F / (4 (n.l)(n.v)), alpha = roughness^2
// (roughness floored at kMinRoughness), F0 = lerp(0.04, albedo, metallic).
inline Vec3 ggx_specular(const MaterialSample &mat, const Vec3 &n, const Vec3 &l,
                         const Vec3 &v) {
    double n_dot_l = dot(n, l);
    double n_dot_v = dot(n, v);
    if (n_dot_l <= 0 || n_dot_v <= 0) return Vec3(0.0);
    Vec3 h = normalize(l + v);
    double r = std::max(mat.roughness, kMinRoughness);
    double alpha = r * r;
    double d = ggx_ndf(alpha, dot(n, h));
    double g = smith_g_schlick(alpha, n_dot_l, n_dot_v);
    Vec3 f0 = lerp(Vec3(0.04), mat.albedo, mat.metallic);
    Vec3 f = fresnel_schlick(f0, dot(h, v));
    return f * (d * g / (4.0 * n_dot_l * n_dot_v));
}

// Material response: Disney = (1 - metallic) * diffuse + specular;
// Lambert = albedo/pi above the horizon (analytic test mode).
inline Vec3 brdf_eval(const MaterialSample &mat, const Vec3 &n, const Vec3 &l,
                      const Vec3 &v, BrdfMode mode) {
    if (mode == BrdfMode::Lambert) {
        if (dot(n, l) <= 0 || dot(n, v) <= 0) return Vec3(0.0);
        return mat.albedo * kInvPi;
    }
    return disney_diffuse(mat, n, l, v) * (1.0 - mat.metallic) + ggx_specular(mat, n, l, v);
}

}  // namespace relit
