// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "relit/envmap.hpp"
#include "relit/episode.hpp"
#include "relit/errors.hpp"
#include "relit/gbuffer.hpp"
#include "relit/image.hpp"
#include "relit/mesh.hpp"
#include "relit/metrics.hpp"
#include "relit/optimize.hpp"
#include "relit/render.hpp"
#include "relit/temporal.hpp"

namespace py = pybind11;
using namespace relit;

namespace {

using FloatArr = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArr = py::array_t<double, py::array::c_style | py::array::forcecast>;

RadianceImage image_from(const FloatArr &a, const char *name) {
    int h, w, c;
    if (a.ndim() == 2) {
        h = int(a.shape(0)), w = int(a.shape(1)), c = 1;
    } else if (a.ndim() == 3) {
        h = int(a.shape(0)), w = int(a.shape(1)), c = int(a.shape(2));
    } else {
        throw ValidationError(std::string(name) + " must be an HxW or HxWxC array");
    }
    RadianceImage img(w, h, c);
    std::memcpy(img.data().data(), a.data(), sizeof(float) * img.size());
    return img;
}

py::array_t<float> to_array(const RadianceImage &img) {
    py::array_t<float> out;
    if (img.channels() == 1)
        out = py::array_t<float>({img.height(), img.width()});
    else
        out = py::array_t<float>({img.height(), img.width(), img.channels()});
    std::memcpy(out.mutable_data(), img.data().data(), sizeof(float) * img.size());
    return out;
}

Intrinsics intrinsics_from(const DoubleArr &K) {
    if (K.ndim() != 2 || K.shape(0) != 3 || K.shape(1) != 3)
        throw ValidationError("camera matrix must be 3x3");
    auto r = K.unchecked<2>();
    Intrinsics k;
    k.fx = r(0, 0);
    k.fy = r(1, 1);
    k.cx = r(0, 2);
    k.cy = r(1, 2);
    return k;
}

GBuffer gbuffer_from(const FloatArr &albedo, const FloatArr &roughness,
                     const FloatArr &metallic, const FloatArr &normal,
                     const FloatArr &depth, const DoubleArr &K) {
    GBuffer g;
    g.albedo = image_from(albedo, "albedo");
    g.roughness = image_from(roughness, "roughness");
    g.metallic = image_from(metallic, "metallic");
    g.normal = image_from(normal, "normal");
    g.depth = image_from(depth, "depth");
    g.intrinsics = intrinsics_from(K);
    g.validate();
    return g;
}

EnvironmentMap env_from(const FloatArr &env) {
    return EnvironmentMap::build_sampling_tables(image_from(env, "env"));
}

BrdfMode mode_from(const std::string &s) {
    if (s == "disney") return BrdfMode::Disney;
    if (s == "lambert") return BrdfMode::Lambert;
    throw ValidationError("unknown brdf mode '" + s + "' (expected disney or lambert)");
}

RenderSettings settings_from(int spp, const std::string &mode, uint64_t seed,
                             double exposure, int threads) {
    RenderSettings s;
    s.spp = spp;
    s.mode = mode_from(mode);
    s.seed = seed;
    s.exposure = exposure;
    s.threads = threads;
    return s;
}

std::vector<RadianceImage> frames_from(const FloatArr &frames) {
    if (frames.ndim() != 4)
        throw ValidationError("frames must be a TxHxWxC array");
    int t = int(frames.shape(0)), h = int(frames.shape(1)), w = int(frames.shape(2)),
        c = int(frames.shape(3));
    std::vector<RadianceImage> out;
    out.reserve(size_t(t));
    const float *p = frames.data();
    for (int i = 0; i < t; ++i) {
        RadianceImage img(w, h, c);
        std::memcpy(img.data().data(), p + size_t(i) * img.size(), sizeof(float) * img.size());
        out.push_back(std::move(img));
    }
    return out;
}

py::array_t<float> frames_to_array(const std::vector<RadianceImage> &frames) {
    const RadianceImage &f0 = frames.front();
    py::array_t<float> out(
        {int(frames.size()), f0.height(), f0.width(), f0.channels()});
    float *p = out.mutable_data();
    for (size_t i = 0; i < frames.size(); ++i)
        std::memcpy(p + i * f0.size(), frames[i].data().data(), sizeof(float) * f0.size());
    return out;
}

}  // namespace

PYBIND11_MODULE(_relit, m) {
    m.doc() = "Physically based G-buffer relighting, lighting estimation, and "
              "episode augmentation";
    m.attr("__version__") = "1.0.0";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    m.def(
        "relight",
        [](const FloatArr &albedo, const FloatArr &roughness, const FloatArr &metallic,
           const FloatArr &normal, const FloatArr &depth, const DoubleArr &K,
           const FloatArr &env, int spp, const std::string &mode, uint64_t seed,
           double exposure, int threads) {
            GBuffer g = gbuffer_from(albedo, roughness, metallic, normal, depth, K);
            return to_array(relight_frame(g, env_from(env), settings_from(spp, mode, seed, exposure, threads)));
        },
        py::arg("albedo"), py::arg("roughness"), py::arg("metallic"), py::arg("normal"),
        py::arg("depth"), py::arg("K"), py::arg("env"), py::arg("spp") = 256,
        py::arg("mode") = "disney", py::arg("seed") = 0, py::arg("exposure") = 1.0,
        py::arg("threads") = 0,
        "Monte Carlo re-render of a G-buffer under an equirectangular HDR map; "
        "returns a linear HxWx3 image.");

    m.def(
        "estimate_env",
        [](const FloatArr &albedo, const FloatArr &roughness, const FloatArr &metallic,
           const FloatArr &normal, const FloatArr &depth, const DoubleArr &K,
           const FloatArr &frame, int env_width, int env_height, double ridge,
           int max_iters, double tol, const std::string &mode, int threads) {
            GBuffer g = gbuffer_from(albedo, roughness, metallic, normal, depth, K);
            EnvEstimateConfig cfg;
            cfg.env_width = env_width;
            cfg.env_height = env_height;
            cfg.ridge = ridge;
            cfg.max_iters = max_iters;
            cfg.tol = tol;
            EnvEstimateResult r = estimate_envmap(g, image_from(frame, "frame"), cfg,
                                                  settings_from(1, mode, 0, 1.0, threads));
            py::dict out;
            out["env"] = to_array(r.env.radiance());
            out["relative_residual"] = r.relative_residual;
            out["iterations"] = r.iterations;
            out["converged"] = r.converged;
            return out;
        },
        py::arg("albedo"), py::arg("roughness"), py::arg("metallic"), py::arg("normal"),
        py::arg("depth"), py::arg("K"), py::arg("frame"), py::arg("env_width") = 32,
        py::arg("env_height") = 16, py::arg("ridge") = 1e-3, py::arg("max_iters") = 500,
        py::arg("tol") = 1e-4, py::arg("mode") = "disney", py::arg("threads") = 0,
        "Recovers a nonnegative environment map from one frame via the linear "
        "transport system.");

    m.def(
        "refine",
        [](const FloatArr &albedo, const FloatArr &roughness, const FloatArr &metallic,
           const FloatArr &normal, const FloatArr &depth, const DoubleArr &K,
           const FloatArr &frame, const FloatArr &env, double delta, int iterations,
           double step_size, int spp_inner, const std::string &mode, uint64_t seed,
           int threads) {
            GBuffer g = gbuffer_from(albedo, roughness, metallic, normal, depth, K);
            RefineConfig cfg;
            cfg.delta = delta;
            cfg.iterations = iterations;
            cfg.step_size = step_size;
            cfg.spp_inner = spp_inner;
            RefineResult r =
                refine_properties(g, image_from(frame, "frame"), env_from(env), cfg,
                                  settings_from(spp_inner, mode, seed, 1.0, threads));
            py::dict out;
            out["albedo"] = to_array(r.gbuf.albedo);
            out["roughness"] = to_array(r.gbuf.roughness);
            out["loss_trace"] = r.loss_trace;
            out["stalled"] = r.stalled;
            return out;
        },
        py::arg("albedo"), py::arg("roughness"), py::arg("metallic"), py::arg("normal"),
        py::arg("depth"), py::arg("K"), py::arg("frame"), py::arg("env"),
        py::arg("delta") = 0.1, py::arg("iterations") = 200, py::arg("step_size") = 0.05,
        py::arg("spp_inner") = 64, py::arg("mode") = "disney", py::arg("seed") = 0,
        py::arg("threads") = 0,
        "Gradient refinement of albedo/roughness against an observed frame under "
        "known lighting.");

    m.def(
        "quotient_propagate",
        [](const FloatArr &frames, const FloatArr &relit_first, double epsilon,
           double gain_max) {
            std::vector<RadianceImage> seq = frames_from(frames);
            if (seq.empty()) throw ValidationError("frames is empty");
            QuotientMap q =
                quotient_map(seq[0], image_from(relit_first, "relit_first"), epsilon, gain_max);
            return frames_to_array(propagate(seq, q));
        },
        py::arg("frames"), py::arg("relit_first"), py::arg("epsilon") = 1e-3,
        py::arg("gain_max") = 8.0,
        "Transfers the frame-0 relighting ratio to every frame of a TxHxWxC "
        "sequence.");

    m.def(
        "sample_jitter",
        [](uint64_t seed) {
            JitterParams p = sample_jitter(seed);
            py::dict out;
            out["brightness"] = p.brightness;
            out["contrast"] = p.contrast;
            out["saturation"] = p.saturation;
            out["hue"] = p.hue;
            return out;
        },
        py::arg("seed"),
        "Deterministic photometric jitter parameters for a seed.");

    m.def(
        "degrade",
        [](const FloatArr &frames, double brightness, double contrast, double saturation,
           double hue) {
            Episode ep;
            ep.frames = frames_from(frames);
            size_t t = ep.frames.size();
            ep.proprio.assign(t, {});
            ep.actions.assign(t, {});
            JitterParams p;
            p.brightness = brightness;
            p.contrast = contrast;
            p.saturation = saturation;
            p.hue = hue;
            return frames_to_array(degrade_episode(ep, p).frames);
        },
        py::arg("frames"), py::arg("brightness") = 1.0, py::arg("contrast") = 1.0,
        py::arg("saturation") = 1.0, py::arg("hue") = 0.0,
        "Applies brightness/contrast/saturation/hue degradation (sRGB domain, "
        "fixed order) to a TxHxWx3 sequence.");

    m.def(
        "depth_to_mesh",
        [](const FloatArr &depth, const DoubleArr &K, double discontinuity_ratio) {
            TriMesh mesh =
                depth_to_mesh(image_from(depth, "depth"), intrinsics_from(K), discontinuity_ratio);
            py::array_t<double> verts({int(mesh.vertices.size()), 3});
            auto v = verts.mutable_unchecked<2>();
            for (size_t i = 0; i < mesh.vertices.size(); ++i) {
                v(py::ssize_t(i), 0) = mesh.vertices[i].x;
                v(py::ssize_t(i), 1) = mesh.vertices[i].y;
                v(py::ssize_t(i), 2) = mesh.vertices[i].z;
            }
            py::array_t<int> faces({int(mesh.faces.size()), 3});
            auto f = faces.mutable_unchecked<2>();
            for (size_t i = 0; i < mesh.faces.size(); ++i)
                for (int j = 0; j < 3; ++j) f(py::ssize_t(i), j) = mesh.faces[i][size_t(j)];
            return py::make_tuple(verts, faces);
        },
        py::arg("depth"), py::arg("K"), py::arg("discontinuity_ratio") = 1.1,
        "Triangulates a depth map into (vertices Nx3, faces Mx3), dropping "
        "depth-discontinuous and degenerate triangles.");

    m.def(
        "background",
        [](const FloatArr &albedo, const FloatArr &roughness, const FloatArr &metallic,
           const FloatArr &normal, const FloatArr &depth, const DoubleArr &K,
           const FloatArr &keep_mask, const FloatArr &env, int spp,
           const std::string &mode, uint64_t seed, double exposure, int threads,
           double discontinuity_ratio) {
            GBuffer g = gbuffer_from(albedo, roughness, metallic, normal, depth, K);
            TriMesh mesh = depth_to_mesh(g.depth, g.intrinsics, discontinuity_ratio);
            return to_array(render_background(
                mesh, g, image_from(keep_mask, "keep_mask"), env_from(env),
                settings_from(spp, mode, seed, exposure, threads)));
        },
        py::arg("albedo"), py::arg("roughness"), py::arg("metallic"), py::arg("normal"),
        py::arg("depth"), py::arg("K"), py::arg("keep_mask"), py::arg("env"),
        py::arg("spp") = 256, py::arg("mode") = "disney", py::arg("seed") = 0,
        py::arg("exposure") = 1.0, py::arg("threads") = 0,
        py::arg("discontinuity_ratio") = 1.1,
        "Relights the reconstructed scene mesh, keeping masked foreground pixels "
        "and feathering the seam.");

    m.def(
        "ssim",
        [](const FloatArr &a, const FloatArr &b) {
            return ssim(image_from(a, "a"), image_from(b, "b"));
        },
        py::arg("a"), py::arg("b"),
        "Mean structural similarity over an 11x11 Gaussian window.");

    m.def(
        "psnr",
        [](const FloatArr &a, const FloatArr &b, double peak) {
            return psnr(image_from(a, "a"), image_from(b, "b"), peak);
        },
        py::arg("a"), py::arg("b"), py::arg("peak") = 1.0,
        "Peak signal-to-noise ratio in dB, capped at 99 for identical images.");

    m.def(
        "temporal_ssim",
        [](const FloatArr &frames) { return temporal_ssim(frames_from(frames)); },
        py::arg("frames"),
        "Mean SSIM between consecutive frame pairs of a TxHxWxC sequence.");

    m.def("srgb_encode", [](double v) { return srgb_encode(v); }, py::arg("v"));
    m.def("srgb_decode", [](double v) { return srgb_decode(v); }, py::arg("v"));
}
