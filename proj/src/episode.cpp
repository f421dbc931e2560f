// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/episode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "relit/errors.hpp"
#include "relit/image_io.hpp"
#include "relit/rng.hpp"
#include "relit/temporal.hpp"

namespace fs = std::filesystem;

namespace relit {

void Episode::validate() const {
    if (frames.empty()) throw ValidationError("episode has no frames");
    for (size_t i = 1; i < frames.size(); ++i)
        if (!frames[i].same_shape(frames[0]))
            throw ValidationError("episode frame " + std::to_string(i) +
                                  " does not match frame 0's dimensions");
    if (proprio.size() != frames.size())
        throw ValidationError("proprio has " + std::to_string(proprio.size()) +
                              " rows but episode has " + std::to_string(frames.size()) +
                              " frames");
    if (actions.size() != frames.size())
        throw ValidationError("actions has " + std::to_string(actions.size()) +
                              " rows but episode has " + std::to_string(frames.size()) +
                              " frames");
    for (const auto *mat : {&proprio, &actions})
        for (size_t i = 1; i < mat->size(); ++i)
            if ((*mat)[i].size() != (*mat)[0].size())
                throw ValidationError("ragged row " + std::to_string(i) +
                                      " in episode records");
}

namespace {

std::string frame_name(size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu.png", i);
    return buf;
}

std::vector<std::vector<double>> load_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open csv file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<double> row;
        if (!line.empty()) {
            size_t pos = 0;
            while (true) {
                size_t comma = line.find(',', pos);
                std::string cell = line.substr(
                    pos, comma == std::string::npos ? std::string::npos : comma - pos);
                const char *s = cell.c_str();
                char *end = nullptr;
                double v = std::strtod(s, &end);
                if (end == s || *end != '\0')
                    throw IoError("malformed number '" + cell + "' in csv file: " + path);
                row.push_back(v);
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_csv(const std::vector<std::vector<double>> &rows, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open csv file for writing: " + path);
    char cell[64];
    for (const auto &row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(cell, sizeof(cell), "%.17g", row[i]);
            if (i) out << ',';
            out << cell;
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing csv file: " + path);
}

}  // namespace

Episode load_episode(const std::string &dir) {
    const fs::path root(dir);
    const fs::path frames_dir = root / "frames";
    if (!fs::is_directory(frames_dir))
        throw IoError("episode is missing its frames directory: " + frames_dir.string());

    Episode ep;
    for (size_t i = 0;; ++i) {
        fs::path p = frames_dir / frame_name(i);
        if (!fs::exists(p)) break;
        ep.frames.push_back(load_png(p.string()));
    }
    if (ep.frames.empty())
        throw IoError("episode has no frames: " + frames_dir.string());

    for (const char *name : {"proprio.csv", "actions.csv", "meta.txt"})
        if (!fs::exists(root / name))
            throw IoError("episode is missing " + (root / name).string());

    ep.proprio = load_csv((root / "proprio.csv").string());
    ep.actions = load_csv((root / "actions.csv").string());

    std::ifstream meta((root / "meta.txt").string());
    std::string line;
    while (std::getline(meta, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            ep.meta.emplace_back(line, "");
        else
            ep.meta.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }

    ep.validate();
    return ep;
}

void save_episode(const Episode &ep, const std::string &dir) {
    ep.validate();
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root / "frames", ec);
    if (ec) throw IoError("cannot create episode directory: " + (root / "frames").string());

    for (size_t i = 0; i < ep.frames.size(); ++i)
        save_png(ep.frames[i], (root / "frames" / frame_name(i)).string());
    save_csv(ep.proprio, (root / "proprio.csv").string());
    save_csv(ep.actions, (root / "actions.csv").string());

    std::ofstream meta((root / "meta.txt").string(), std::ios::binary);
    if (!meta) throw IoError("cannot open meta file for writing: " + (root / "meta.txt").string());
    for (const auto &[k, v] : ep.meta) meta << k << '=' << v << '\n';
    if (!meta) throw IoError("failed writing meta file: " + (root / "meta.txt").string());
}

void JitterParams::validate() const {
    auto in_range = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in_range(brightness, 0.2, 1.9) || !in_range(contrast, 0.2, 1.9) ||
        !in_range(saturation, 0.2, 1.9))
        throw ValidationError(
            "jitter brightness/contrast/saturation must lie in [0.2, 1.9]");
    if (!in_range(hue, -0.5, 0.5))
        throw ValidationError("jitter hue must lie in [-0.5, 0.5]");
}

JitterParams sample_jitter(uint64_t seed) {
    Pcg32 rng(mix64(seed, 0x6a69747465720000ull));
    JitterParams p;
    p.brightness = 0.2 + rng.next_double() * 1.7;
    p.contrast = 0.2 + rng.next_double() * 1.7;
    p.saturation = 0.2 + rng.next_double() * 1.7;
    p.hue = -0.5 + rng.next_double();
    return p;
}

namespace {

void rgb_to_hsv(double r, double g, double b, double &h, double &s, double &v) {
    double maxc = std::max(r, std::max(g, b));
    double minc = std::min(r, std::min(g, b));
    v = maxc;
    double d = maxc - minc;
    s = maxc > 0.0 ? d / maxc : 0.0;
    if (d <= 0.0) {
        h = 0.0;
        return;
    }
    if (maxc == r)
        h = (g - b) / d;
    else if (maxc == g)
        h = (b - r) / d + 2.0;
    else
        h = (r - g) / d + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double &r, double &g, double &b) {
    h -= std::floor(h);  // wrap to [0, 1)
    double f6 = h * 6.0;
    int i = std::min(5, int(f6));
    double f = f6 - i;
    double p = v * (1.0 - s);
    double q = v * (1.0 - f * s);
    double t = v * (1.0 - (1.0 - f) * s);
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

// One frame's degradation, operating on sRGB-encoded values.
RadianceImage degrade_frame(const RadianceImage &frame, const JitterParams &p) {
    const int w = frame.width(), h = frame.height();
    RadianceImage enc(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 v = frame.rgb(x, y);
            enc.set_rgb(x, y,
                        Vec3(srgb_encode(v.x), srgb_encode(v.y), srgb_encode(v.z)));
        }

    // Brightness: plain scale.
    for (float &v : enc.data()) v = float(std::clamp(double(v) * p.brightness, 0.0, 1.0));

    // Contrast: expand about the frame's mean luma.
    double mean_luma = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) mean_luma += luminance(enc.rgb(x, y));
    mean_luma /= double(w) * h;
    for (float &v : enc.data())
        v = float(std::clamp((double(v) - mean_luma) * p.contrast + mean_luma, 0.0, 1.0));

    // Saturation: move each pixel toward (or past) its own luma.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 v = enc.rgb(x, y);
            Vec3 l(luminance(v));
            enc.set_rgb(x, y, clamp01(lerp(l, v, p.saturation)));
        }

    // Hue: HSV rotation by p.hue turns.
    if (p.hue != 0.0)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                Vec3 v = enc.rgb(x, y);
                double hh, ss, vv;
                rgb_to_hsv(v.x, v.y, v.z, hh, ss, vv);
                hsv_to_rgb(hh + p.hue, ss, vv, v.x, v.y, v.z);
                enc.set_rgb(x, y, v);
            }

    RadianceImage out(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 v = enc.rgb(x, y);
            out.set_rgb(x, y, Vec3(srgb_decode(v.x), srgb_decode(v.y), srgb_decode(v.z)));
        }
    return out;
}

}  // namespace

Episode degrade_episode(const Episode &ep, const JitterParams &params) {
    params.validate();
    ep.validate();
    Episode out = ep;
    for (size_t i = 0; i < ep.frames.size(); ++i)
        out.frames[i] = degrade_frame(ep.frames[i], params);
    return out;
}

namespace {

void check_mask(const GBuffer &gbuf, const RadianceImage &mask, const char *what) {
    if (mask.width() != gbuf.width() || mask.height() != gbuf.height() ||
        mask.channels() != 1)
        throw ValidationError(std::string(what) + ": mask must be " +
                              std::to_string(gbuf.width()) + "x" +
                              std::to_string(gbuf.height()) + "x1");
}

}  // namespace

GBuffer swap_albedo(const GBuffer &gbuf, const RadianceImage &segment_mask,
                    const Vec3 &new_albedo) {
    check_mask(gbuf, segment_mask, "swap_albedo");
    if (new_albedo.x < 0 || new_albedo.x > 1 || new_albedo.y < 0 || new_albedo.y > 1 ||
        new_albedo.z < 0 || new_albedo.z > 1)
        throw ValidationError("swap_albedo: new albedo must lie in [0, 1]");
    GBuffer out = gbuf;
    for (int y = 0; y < gbuf.height(); ++y)
        for (int x = 0; x < gbuf.width(); ++x)
            if (segment_mask.at(x, y) >= 0.5f) out.albedo.set_rgb(x, y, new_albedo);
    return out;
}

GBuffer swap_albedo(const GBuffer &gbuf, const RadianceImage &segment_mask,
                    const RadianceImage &new_albedo) {
    check_mask(gbuf, segment_mask, "swap_albedo");
    if (!new_albedo.same_shape(gbuf.albedo))
        throw ValidationError("swap_albedo: albedo image dimensions do not match G-buffer");
    for (float v : new_albedo.data())
        if (!(v >= 0.f && v <= 1.f))
            throw ValidationError("swap_albedo: new albedo must lie in [0, 1]");
    GBuffer out = gbuf;
    for (int y = 0; y < gbuf.height(); ++y)
        for (int x = 0; x < gbuf.width(); ++x)
            if (segment_mask.at(x, y) >= 0.5f)
                out.albedo.set_rgb(x, y, new_albedo.rgb(x, y));
    return out;
}

AugmentResult augment_episode(const Episode &ep, const GBuffer &gbuf,
                              const std::vector<EnvironmentMap> &envs,
                              const RenderSettings &settings, const AugmentConfig &cfg) {
    ep.validate();
    settings.validate();
    if (envs.empty()) throw ValidationError("augment_episode: no environment maps given");
    if (ep.frames[0].width() != gbuf.width() || ep.frames[0].height() != gbuf.height())
        throw ValidationError("augment_episode: episode frames are " +
                              std::to_string(ep.frames[0].width()) + "x" +
                              std::to_string(ep.frames[0].height()) + " but G-buffer is " +
                              std::to_string(gbuf.width()) + "x" +
                              std::to_string(gbuf.height()));

    using clock = std::chrono::steady_clock;
    AugmentResult result;

    // Property estimation/refinement happens once; every environment reuses
    // the refined buffer.
    GBuffer working = gbuf;
    if (cfg.refine) {
        auto t0 = clock::now();
        EnvEstimateResult est = estimate_envmap(gbuf, ep.frames[0], cfg.estimate_cfg,
                                                settings);
        result.estimate_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        result.estimate_converged = est.converged;

        auto t1 = clock::now();
        RefineResult refined =
            refine_properties(gbuf, ep.frames[0], est.env, cfg.refine_cfg, settings);
        result.refine_seconds = std::chrono::duration<double>(clock::now() - t1).count();
        working = std::move(refined.gbuf);
    }

    result.items.resize(envs.size());
    for (size_t i = 0; i < envs.size(); ++i) {
        AugmentItem &item = result.items[i];
        try {
            RadianceImage relit0 = relight_frame(working, envs[i], settings);
            QuotientMap qmap = quotient_map(ep.frames[0], relit0);
            Episode out = ep;
            out.frames = propagate(ep.frames, qmap);
            item.episode = std::move(out);
            item.ok = true;
        } catch (const std::exception &e) {
            item.ok = false;
            item.error = e.what();
        }
    }
    return result;
}

}  // namespace relit
