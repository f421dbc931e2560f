// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/gbuffer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "relit/image_io.hpp"

namespace relit {

namespace fs = std::filesystem;

Intrinsics load_intrinsics(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_intrinsics: cannot open '" + path + "'");
    Intrinsics K;
    if (!(in >> K.fx >> K.fy >> K.cx >> K.cy))
        throw IoError("load_intrinsics: expected 'fx fy cx cy' in '" + path + "'");
    if (K.fx == 0 || K.fy == 0)
        throw ValidationError("load_intrinsics: zero focal length in '" + path + "'");
    return K;
}

void save_intrinsics(const Intrinsics &K, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_intrinsics: cannot open '" + path + "' for writing");
    out.precision(17);
    out << K.fx << " " << K.fy << " " << K.cx << " " << K.cy << "\n";
}

void GBuffer::validate(double normal_tol) {
    const struct {
        const char *name;
        const RadianceImage *img;
        int channels;
    } maps[] = {{"albedo", &albedo, 3},
                {"roughness", &roughness, 1},
                {"metallic", &metallic, 1},
                {"normal", &normal, 3},
                {"depth", &depth, 1}};

    for (const auto &m : maps) {
        if (m.img->empty()) throw ValidationError(std::string("GBuffer: missing ") + m.name);
        if (m.img->channels() != m.channels)
            throw ValidationError(std::string("GBuffer: ") + m.name + " must have " +
                                  std::to_string(m.channels) + " channel(s)");
        if (m.img->width() != albedo.width() || m.img->height() != albedo.height())
            throw ValidationError(std::string("GBuffer: dimension mismatch between albedo (") +
                                  std::to_string(albedo.width()) + "x" +
                                  std::to_string(albedo.height()) + ") and " + m.name + " (" +
                                  std::to_string(m.img->width()) + "x" +
                                  std::to_string(m.img->height()) + ")");
    }

    auto check01 = [](const RadianceImage &img, const char *name) {
        for (float v : img.data()) {
            if (!std::isfinite(v) || v < 0.f || v > 1.f)
                throw ValidationError(std::string("GBuffer: ") + name + " outside [0,1]");
        }
    };
    check01(albedo, "albedo");
    check01(roughness, "roughness");
    check01(metallic, "metallic");

    for (float v : depth.data())
        if (!std::isfinite(v) || v <= 0.f)
            throw ValidationError("GBuffer: depth must be strictly positive");

    for (int y = 0; y < normal.height(); ++y) {
        for (int x = 0; x < normal.width(); ++x) {
            Vec3 n = normal.rgb(x, y);
            double len = length(n);
            if (!std::isfinite(len) || std::abs(len - 1.0) > normal_tol)
                throw ValidationError("GBuffer: normal at (" + std::to_string(x) + "," +
                                      std::to_string(y) + ") has length " +
                                      std::to_string(len));
            if (std::abs(len - 1.0) > 1e-3) normal.set_rgb(x, y, n / len);
        }
    }
}

namespace {

// A map may exist as either <name>.pfm or <name>.png.
std::string find_map(const std::string &dir, const std::string &name) {
    fs::path pfm = fs::path(dir) / (name + ".pfm");
    if (fs::exists(pfm)) return pfm.string();
    fs::path png = fs::path(dir) / (name + ".png");
    if (fs::exists(png)) return png.string();
    throw IoError("load_gbuffer: missing map '" + name + "' in '" + dir + "'");
}

bool is_png(const std::string &path) { return path.size() >= 4 && path.substr(path.size() - 4) == ".png"; }

}  // namespace

GBuffer load_gbuffer(const std::string &dir) {
    if (!fs::is_directory(dir)) throw IoError("load_gbuffer: '" + dir + "' is not a directory");

    GBuffer g;
    std::string albedo_path = find_map(dir, "albedo");
    // PNG albedo arrives sRGB-decoded from load_png, which is the linear
    // reflectance we want; PFM is taken as-is.
    g.albedo = load_image(albedo_path);

    auto load_scalar = [&](const std::string &name) {
        std::string path = find_map(dir, name);
        RadianceImage img = load_image(path);
        if (img.channels() == 3) img = to_luma(img);
        if (is_png(path)) {
            // Scalar maps in PNG are plain 8-bit fractions, not sRGB.
            for (float &v : img.data())
                v = static_cast<float>(srgb_encode(v));
        }
        return img;
    };
    g.roughness = load_scalar("roughness");
    g.metallic = load_scalar("metallic");

    std::string normal_path = find_map(dir, "normal");
    g.normal = load_image(normal_path);
    if (g.normal.channels() != 3)
        throw ValidationError("load_gbuffer: normal map must have 3 channels");
    if (is_png(normal_path)) {
        // PNG normals use the n' = (n+1)/2 encoding on raw 8-bit fractions.
        for (int y = 0; y < g.normal.height(); ++y) {
            for (int x = 0; x < g.normal.width(); ++x) {
                Vec3 enc = g.normal.rgb(x, y);
                Vec3 n(srgb_encode(enc.x) * 2.0 - 1.0, srgb_encode(enc.y) * 2.0 - 1.0,
                       srgb_encode(enc.z) * 2.0 - 1.0);
                double len = length(n);
                if (len <= 0)
                    throw ValidationError("load_gbuffer: zero-length normal in '" +
                                          normal_path + "'");
                g.normal.set_rgb(x, y, n / len);
            }
        }
    }

    std::string depth_path = find_map(dir, "depth");
    if (is_png(depth_path))
        throw ValidationError("load_gbuffer: depth must be stored as PFM, got '" +
                              depth_path + "'");
    g.depth = load_pfm(depth_path);
    if (g.depth.channels() == 3) g.depth = to_luma(g.depth);

    g.intrinsics = load_intrinsics((fs::path(dir) / "intrinsics.txt").string());

    g.validate();
    return g;
}

void save_gbuffer(const GBuffer &g, const std::string &dir) {
    fs::create_directories(dir);
    save_pfm(g.albedo, (fs::path(dir) / "albedo.pfm").string());
    save_pfm(g.roughness, (fs::path(dir) / "roughness.pfm").string());
    save_pfm(g.metallic, (fs::path(dir) / "metallic.pfm").string());
    save_pfm(g.normal, (fs::path(dir) / "normal.pfm").string());
    save_pfm(g.depth, (fs::path(dir) / "depth.pfm").string());
    save_intrinsics(g.intrinsics, (fs::path(dir) / "intrinsics.txt").string());
}

}  // namespace relit
