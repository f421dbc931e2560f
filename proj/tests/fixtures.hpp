// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "relit/envmap.hpp"
#include "relit/gbuffer.hpp"
#include "relit/image.hpp"
#include "relit/rng.hpp"
#include "relit/vec.hpp"

namespace relit::testing {

// Unique throwaway directory, removed on scope exit.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("relit_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::string str(const std::string &rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

  private:
    std::filesystem::path path_;
};

inline RadianceImage constant_image(int w, int h, int c, float value) {
    RadianceImage img(w, h, c);
    for (float &v : img.data()) v = value;
    return img;
}

inline RadianceImage constant_rgb(int w, int h, const Vec3 &rgb) {
    RadianceImage img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.set_rgb(x, y, rgb);
    return img;
}

inline RadianceImage random_image(int w, int h, int c, Pcg32 &rng, float lo = 0.f,
                                  float hi = 1.f) {
    RadianceImage img(w, h, c);
    for (float &v : img.data()) v = lo + float(rng.next_double()) * (hi - lo);
    return img;
}

inline Intrinsics default_intrinsics(int w, int h) {
    Intrinsics k;
    k.fx = w;
    k.fy = w;
    k.cx = w / 2.0;
    k.cy = h / 2.0;
    return k;
}

// Camera-facing flat scene: normals (0,0,1), unit depth.
inline GBuffer flat_gbuffer(int w, int h, const Vec3 &albedo, float roughness = 0.5f,
                            float metallic = 0.f) {
    GBuffer g;
    g.albedo = constant_rgb(w, h, albedo);
    g.roughness = constant_image(w, h, 1, roughness);
    g.metallic = constant_image(w, h, 1, metallic);
    g.normal = constant_rgb(w, h, Vec3(0, 0, 1));
    g.depth = constant_image(w, h, 1, 1.f);
    g.intrinsics = default_intrinsics(w, h);
    return g;
}

// Varied camera-facing normals (z kept dominant) and varied materials.
inline GBuffer random_gbuffer(int w, int h, Pcg32 &rng, bool lambert_materials = false) {
    GBuffer g = flat_gbuffer(w, h, Vec3(0.5, 0.5, 0.5));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Vec3 n(rng.next_double() * 1.6 - 0.8, rng.next_double() * 1.6 - 0.8,
                   0.6 + rng.next_double());
            g.normal.set_rgb(x, y, normalize(n));
            g.albedo.set_rgb(x, y, Vec3(0.1 + 0.8 * rng.next_double(),
                                        0.1 + 0.8 * rng.next_double(),
                                        0.1 + 0.8 * rng.next_double()));
            if (!lambert_materials) {
                g.roughness.at(x, y) = float(0.1 + 0.9 * rng.next_double());
                g.metallic.at(x, y) = float(rng.next_double());
            }
            g.depth.at(x, y) = float(0.5 + rng.next_double());
        }
    }
    return g;
}

inline EnvironmentMap constant_env(int w, int h, const Vec3 &value) {
    return EnvironmentMap::build_sampling_tables(constant_rgb(w, h, value));
}

inline EnvironmentMap random_env(int w, int h, Pcg32 &rng, float lo = 0.05f,
                                 float hi = 2.f) {
    return EnvironmentMap::build_sampling_tables(random_image(w, h, 3, rng, lo, hi));
}

inline std::string read_bytes(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

inline void write_bytes(const std::string &path, const std::string &bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

inline bool same_bits(const RadianceImage &a, const RadianceImage &b) {
    return a.width() == b.width() && a.height() == b.height() &&
           a.channels() == b.channels() && a.data() == b.data();
}

}  // namespace relit::testing
