// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "relit/metrics.hpp"
#include "relit/optimize.hpp"
#include "relit/render.hpp"

using namespace relit;
using namespace relit::testing;
using doctest::Approx;

namespace {

RenderSettings lambert_settings(int spp, uint64_t seed) {
    RenderSettings s;
    s.mode = BrdfMode::Lambert;
    s.sampler = SamplerKind::CosineOnly;
    s.spp = spp;
    s.seed = seed;
    s.threads = 1;
    return s;
}

// diffuse_coef * albedo + specular, channelwise (the affine recomposition the
// refinement solver optimizes through).
RadianceImage compose(const RadianceImage &d, const RadianceImage &s,
                      const RadianceImage &albedo) {
    RadianceImage out(d.width(), d.height(), 3);
    for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] = d.data()[i] * albedo.data()[i] + s.data()[i];
    return out;
}

double image_rms(const RadianceImage &a, const RadianceImage &b) {
    return std::sqrt(mse(a, b));
}

}  // namespace

TEST_CASE("basis texels match the clamped-cosine quadrature formula") {
    // One sub-sample per texel makes each basis value a single-term
    // quadrature: brdf * cos(theta) * solid angle at the texel center.
    const Vec3 albedo(0.6, 0.4, 0.2);
    GBuffer gbuf = flat_gbuffer(3, 2, albedo);
    const int ew = 8, eh = 4;

    RenderSettings settings;
    settings.mode = BrdfMode::Lambert;
    settings.threads = 1;
    std::vector<RadianceImage> basis = transport_basis(gbuf, ew, eh, settings, 1);
    REQUIRE(basis.size() == size_t(ew * eh));

    const Vec3 n(0, 0, 1);
    int lit = 0;
    for (int ty = 0; ty < eh; ++ty) {
        for (int tx = 0; tx < ew; ++tx) {
            double u = (tx + 0.5) / ew;
            double v = (ty + 0.5) / eh;
            Vec3 dir = uv_to_dir(u, v);
            double dw = (kTwoPi / ew) * (kPi / eh) * std::sin(kPi * v);
            double cos_l = std::max(0.0, dot(n, dir));
            Vec3 expected = albedo * (kInvPi * cos_l * dw);
            if (cos_l > 0) ++lit;

            const RadianceImage &b = basis[ty * ew + tx];
            REQUIRE(b.width() == 3);
            REQUIRE(b.height() == 2);
            for (int y = 0; y < 2; ++y) {
                for (int x = 0; x < 3; ++x) {
                    CHECK(b.at(x, y, 0) == Approx(expected.x).epsilon(1e-6));
                    CHECK(b.at(x, y, 1) == Approx(expected.y).epsilon(1e-6));
                    CHECK(b.at(x, y, 2) == Approx(expected.z).epsilon(1e-6));
                }
            }
        }
    }
    // Exactly half the texel centers face a camera-facing surface.
    CHECK(lit == ew * eh / 2);
}

TEST_CASE("basis images are nonnegative and zero below the horizon") {
    Pcg32 rng(21);
    GBuffer gbuf = random_gbuffer(5, 4, rng);
    RenderSettings settings;
    settings.threads = 1;
    std::vector<RadianceImage> basis = transport_basis(gbuf, 8, 4, settings);
    for (const RadianceImage &b : basis)
        for (float v : b.data()) CHECK(v >= 0.f);

    // For a camera-facing surface the two center columns of an 8-wide map
    // point away from the normal at every sub-sample, so those basis images
    // vanish identically; the wrap-around columns face the surface.
    GBuffer flat = flat_gbuffer(4, 4, Vec3(0.5, 0.5, 0.5));
    basis = transport_basis(flat, 8, 4, settings);
    for (int ty = 0; ty < 4; ++ty) {
        for (float v : basis[ty * 8 + 3].data()) CHECK(v == 0.f);
        for (float v : basis[ty * 8 + 4].data()) CHECK(v == 0.f);
        bool any_positive = false;
        for (float v : basis[ty * 8 + 0].data()) any_positive = any_positive || v > 0.f;
        CHECK(any_positive);
    }
}

TEST_CASE("basis contracted against an all-ones environment matches the renderer") {
    // sum_j B_j * 1 is the deterministic-quadrature version of relighting
    // under a constant environment; compare to the Monte Carlo integrator.
    Pcg32 rng(33);
    GBuffer gbuf = random_gbuffer(6, 6, rng, /*lambert_materials=*/true);
    RenderSettings settings = lambert_settings(4096, 11);

    std::vector<RadianceImage> basis = transport_basis(gbuf, 8, 4, settings);
    RadianceImage contracted(6, 6, 3);
    for (const RadianceImage &b : basis)
        for (size_t i = 0; i < contracted.size(); ++i)
            contracted.data()[i] += b.data()[i];

    EnvironmentMap env = constant_env(8, 4, Vec3(1, 1, 1));
    RadianceImage rendered = relight_frame(gbuf, env, settings);

    for (size_t i = 0; i < contracted.size(); ++i) {
        double ref = rendered.data()[i];
        CHECK(std::abs(contracted.data()[i] - ref) <= 0.02 * std::max(ref, 1e-3));
    }
}

TEST_CASE("basis rejects oversized environments and bad subdivision counts") {
    GBuffer gbuf = flat_gbuffer(2, 2, Vec3(0.5, 0.5, 0.5));
    RenderSettings settings;
    settings.threads = 1;
    CHECK_THROWS_WITH_AS(transport_basis(gbuf, 65, 32, settings),
                         doctest::Contains("64x32"), ValidationError);
    CHECK_THROWS_AS(transport_basis(gbuf, 0, 4, settings), ValidationError);
    CHECK_THROWS_AS(transport_basis(gbuf, 8, 4, settings, 0), ValidationError);
    CHECK_THROWS_AS(transport_basis(gbuf, 8, 4, settings, 9), ValidationError);
}

TEST_CASE("zero frame estimates the zero degenerate environment") {
    GBuffer gbuf = flat_gbuffer(4, 4, Vec3(0.5, 0.5, 0.5));
    RadianceImage frame = constant_image(4, 4, 3, 0.f);
    EnvEstimateConfig cfg;
    cfg.env_width = 8;
    cfg.env_height = 4;

    EnvEstimateResult result = estimate_envmap(gbuf, frame, cfg);
    CHECK(result.env.degenerate());
    CHECK(result.converged);
    CHECK(result.iterations == 0);
    CHECK(result.relative_residual == 0.0);
    for (float v : result.env.radiance().data()) CHECK(v == 0.f);
}

TEST_CASE("a constant environment is recovered from one rendered frame") {
    // Forward-render oracle built first: a diffuse scene whose normals fan
    // out over the camera-facing hemisphere (a single orientation cannot
    // constrain texels it never faces), lit by a known constant environment.
    // Cosine sampling of a diffuse surface under constant lighting is
    // zero-variance, so the frame is exact and the test is deterministic.
    const Vec3 L0(1.0, 0.7, 1.3);
    Pcg32 rng(5);
    GBuffer gbuf = random_gbuffer(16, 16, rng, /*lambert_materials=*/true);
    {
        int i = 0;
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x, ++i) {
                double z = 1.0 - (i + 0.5) / 256.0;
                double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                gbuf.normal.set_rgb(
                    x, y, Vec3(r * std::cos(golden * i), r * std::sin(golden * i), z));
            }
    }
    RenderSettings render_settings = lambert_settings(1024, 9);
    EnvironmentMap truth = constant_env(8, 4, L0);
    RadianceImage frame = relight_frame(gbuf, truth, render_settings);

    EnvEstimateConfig cfg;
    cfg.env_width = 8;
    cfg.env_height = 4;
    cfg.max_iters = 20000;
    cfg.tol = 1e-9;
    EnvEstimateResult result = estimate_envmap(gbuf, frame, cfg, render_settings);

    CHECK_FALSE(result.env.degenerate());
    CHECK(result.converged);
    CHECK(result.relative_residual < 0.05);

    // A single view never observes texels behind every normal in the scene;
    // those stay at the nonnegative prior (zero). Judge recovery on texels
    // that carry meaningful weight in the forward operator.
    std::vector<RadianceImage> basis =
        transport_basis(gbuf, cfg.env_width, cfg.env_height, render_settings);
    std::vector<double> mass(basis.size(), 0.0);
    double max_mass = 0.0;
    for (size_t j = 0; j < basis.size(); ++j) {
        for (float v : basis[j].data()) mass[j] += v;
        max_mass = std::max(max_mass, mass[j]);
    }
    int checked = 0;
    for (int ty = 0; ty < cfg.env_height; ++ty) {
        for (int tx = 0; tx < cfg.env_width; ++tx) {
            size_t j = size_t(ty) * cfg.env_width + tx;
            if (mass[j] < 0.25 * max_mass) continue;
            ++checked;
            CHECK(result.env.radiance().at(tx, ty, 0) == Approx(L0.x).epsilon(0.1));
            CHECK(result.env.radiance().at(tx, ty, 1) == Approx(L0.y).epsilon(0.1));
            CHECK(result.env.radiance().at(tx, ty, 2) == Approx(L0.z).epsilon(0.1));
        }
    }
    CHECK(checked >= 12);

    // Sampling tables are built on the returned map.
    LightSample ls = result.env.sample_light(0.3, 0.7);
    CHECK(ls.pdf > 0.0);
}

TEST_CASE("re-rendering the estimated environment reproduces the frame") {
    // Smooth non-constant environment, judged by the re-render comparison.
    RadianceImage env_img(16, 8, 3);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 16; ++x) {
            double u = (x + 0.5) / 16.0, v = (y + 0.5) / 8.0;
            env_img.at(x, y, 0) = float(0.6 + 0.4 * std::sin(kTwoPi * u));
            env_img.at(x, y, 1) = float(0.5 + 0.3 * std::cos(kTwoPi * u) * std::sin(kPi * v));
            env_img.at(x, y, 2) = float(0.7 - 0.4 * std::cos(kPi * v));
        }
    }
    EnvironmentMap truth = EnvironmentMap::build_sampling_tables(env_img);

    Pcg32 rng(17);
    GBuffer gbuf = random_gbuffer(16, 16, rng, /*lambert_materials=*/true);
    RenderSettings render_settings = lambert_settings(4096, 3);
    RadianceImage frame = relight_frame(gbuf, truth, render_settings);

    EnvEstimateConfig cfg;
    cfg.env_width = 16;
    cfg.env_height = 8;
    cfg.max_iters = 4000;
    cfg.tol = 1e-9;
    EnvEstimateResult result = estimate_envmap(gbuf, frame, cfg, render_settings);

    RenderSettings rerender_settings = lambert_settings(4096, 7);
    RadianceImage rerendered = relight_frame(gbuf, result.env, rerender_settings);

    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < frame.size(); ++i) {
        double d = double(rerendered.data()[i]) - frame.data()[i];
        num += d * d;
        den += double(frame.data()[i]) * frame.data()[i];
    }
    CHECK(std::sqrt(num / den) < 0.15);
    CHECK(ssim(rerendered, frame) >= 0.95);
}

TEST_CASE("environment estimation validates its inputs") {
    GBuffer gbuf = flat_gbuffer(4, 4, Vec3(0.5, 0.5, 0.5));
    EnvEstimateConfig cfg;
    cfg.env_width = 8;
    cfg.env_height = 4;

    CHECK_THROWS_WITH_AS(estimate_envmap(gbuf, constant_image(5, 4, 3, 0.1f), cfg),
                         doctest::Contains("4x4x3"), ValidationError);

    RadianceImage bad = constant_image(4, 4, 3, 0.1f);
    bad.at(2, 1, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(estimate_envmap(gbuf, bad, cfg), ValidationError);

    RadianceImage frame = constant_image(4, 4, 3, 0.1f);
    EnvEstimateConfig bad_cfg = cfg;
    bad_cfg.ridge = -1.0;
    CHECK_THROWS_AS(estimate_envmap(gbuf, frame, bad_cfg), ValidationError);
    bad_cfg = cfg;
    bad_cfg.max_iters = 0;
    CHECK_THROWS_AS(estimate_envmap(gbuf, frame, bad_cfg), ValidationError);
    bad_cfg = cfg;
    bad_cfg.tol = 0.0;
    CHECK_THROWS_AS(estimate_envmap(gbuf, frame, bad_cfg), ValidationError);
    bad_cfg = cfg;
    bad_cfg.env_width = 64;
    bad_cfg.env_height = 33;
    CHECK_THROWS_WITH_AS(estimate_envmap(gbuf, frame, bad_cfg),
                         doctest::Contains("64x32"), ValidationError);
}

TEST_CASE("objective is zero at the target and mse for a constant offset") {
    GBuffer props = flat_gbuffer(4, 4, Vec3(0.3, 0.5, 0.7));
    RadianceImage target = constant_image(4, 4, 3, 0.3f);

    CHECK(loss_lp(target, target, props, props, 0.1) == 0.0);

    RadianceImage rendered = constant_image(4, 4, 3, 0.4f);
    CHECK(loss_lp(rendered, target, props, props, 0.1) == Approx(0.01).epsilon(1e-6));

    // Consistency term: a +0.2 albedo shift contributes delta * 0.04.
    GBuffer shifted = props;
    for (float &v : shifted.albedo.data()) v += 0.2f;
    CHECK(loss_lp(target, target, shifted, props, 0.5) == Approx(0.02).epsilon(1e-6));
}

TEST_CASE("objective matches an independent two-term recomputation") {
    Pcg32 rng(41);
    GBuffer props = random_gbuffer(5, 4, rng);
    GBuffer init = random_gbuffer(5, 4, rng);
    RadianceImage rendered = random_image(5, 4, 3, rng);
    RadianceImage target = random_image(5, 4, 3, rng);
    const double delta = 0.37;

    auto mean_sq = [](const RadianceImage &a, const RadianceImage &b) {
        double acc = 0.0;
        for (size_t i = 0; i < a.size(); ++i) {
            double d = double(a.data()[i]) - b.data()[i];
            acc += d * d;
        }
        return acc / double(a.size());
    };
    double expected = mean_sq(rendered, target) +
                      delta * (mean_sq(props.albedo, init.albedo) +
                               mean_sq(props.roughness, init.roughness) +
                               mean_sq(props.metallic, init.metallic) +
                               mean_sq(props.normal, init.normal) +
                               mean_sq(props.depth, init.depth));
    CHECK(loss_lp(rendered, target, props, init, delta) ==
          Approx(expected).epsilon(1e-12));
}

TEST_CASE("objective rejects mismatched shapes and negative weights") {
    GBuffer props = flat_gbuffer(4, 4, Vec3(0.5, 0.5, 0.5));
    RadianceImage img = constant_image(4, 4, 3, 0.2f);
    CHECK_THROWS_AS(loss_lp(constant_image(3, 4, 3, 0.2f), img, props, props, 0.1),
                    ValidationError);
    CHECK_THROWS_AS(loss_lp(img, img, props, props, -0.1), ValidationError);
    GBuffer other = flat_gbuffer(5, 4, Vec3(0.5, 0.5, 0.5));
    CHECK_THROWS_AS(loss_lp(img, img, props, other, 0.1), ValidationError);
}

TEST_CASE("analytic albedo gradient matches finite differences of the objective") {
    // In diffuse-only mode shading is exactly affine in albedo and the
    // objective is quadratic, so a central difference is exact up to
    // rounding; the analytic gradient must agree to high relative accuracy.
    Pcg32 rng(59);
    GBuffer gbuf = random_gbuffer(4, 4, rng, /*lambert_materials=*/true);
    EnvironmentMap env = random_env(8, 4, rng);
    RadianceImage frame = random_image(4, 4, 3, rng, 0.1f, 0.6f);

    RefineConfig cfg;
    cfg.delta = 0.3;
    cfg.spp_inner = 128;
    RenderSettings settings = lambert_settings(cfg.spp_inner, 0);

    RefineGradients grad = refine_gradients(gbuf, gbuf, frame, env, cfg, settings);

    const double h = 1e-2;
    const double n_pixels = 16.0;
    auto objective_with_albedo = [&](const RadianceImage &albedo) {
        GBuffer g = gbuf;
        g.albedo = albedo;
        RadianceImage rendered = relight_frame(g, env, settings);
        return loss_lp(rendered, frame, g, gbuf, cfg.delta);
    };
    const int probes[][3] = {{0, 0, 0}, {1, 2, 1}, {3, 3, 2}, {2, 1, 0}, {3, 0, 2}};
    for (const auto &p : probes) {
        int x = p[0], y = p[1], c = p[2];
        RadianceImage up = gbuf.albedo, down = gbuf.albedo;
        up.at(x, y, c) = float(up.at(x, y, c) + h);
        down.at(x, y, c) = float(down.at(x, y, c) - h);
        double h_eff = 0.5 * (double(up.at(x, y, c)) - down.at(x, y, c));
        double fd = n_pixels * (objective_with_albedo(up) - objective_with_albedo(down)) /
                    (2.0 * h_eff);
        CHECK(std::abs(grad.albedo.at(x, y, c) - fd) <=
              1e-3 * std::max(std::abs(fd), 1e-9));
    }

    // Roughness has no effect on diffuse-only shading, so its gradient
    // reduces to the consistency term alone — zero at the initial maps.
    for (float v : grad.roughness.data()) CHECK(v == 0.f);

    GBuffer moved = gbuf;
    for (float &v : moved.roughness.data()) v += 0.25f;
    RefineGradients grad2 = refine_gradients(moved, gbuf, frame, env, cfg, settings);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            double expected = 2.0 * cfg.delta *
                              (double(moved.roughness.at(x, y)) - gbuf.roughness.at(x, y));
            CHECK(grad2.roughness.at(x, y) == Approx(expected).epsilon(1e-6));
        }
}

TEST_CASE("refinement with zero iterations returns the input untouched") {
    Pcg32 rng(67);
    GBuffer gbuf = random_gbuffer(4, 4, rng);
    EnvironmentMap env = random_env(8, 4, rng);
    RadianceImage frame = random_image(4, 4, 3, rng);

    RefineConfig cfg;
    cfg.iterations = 0;
    RefineResult result = refine_properties(gbuf, frame, env, cfg);
    CHECK(same_bits(result.gbuf.albedo, gbuf.albedo));
    CHECK(same_bits(result.gbuf.roughness, gbuf.roughness));
    CHECK(same_bits(result.gbuf.metallic, gbuf.metallic));
    CHECK(same_bits(result.gbuf.normal, gbuf.normal));
    CHECK(same_bits(result.gbuf.depth, gbuf.depth));
    CHECK(result.loss_trace.empty());
    CHECK_FALSE(result.stalled);
}

TEST_CASE("refinement holds a target rendered from the initial buffer") {
    // The frame equals the solver's own render of the initial properties
    // (same seed and sample count), so the initial loss is exactly zero and
    // every map must come back bit-identical.
    GBuffer gbuf = flat_gbuffer(6, 6, Vec3(0.4, 0.6, 0.3), 0.4f, 0.2f);
    Pcg32 rng(71);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            gbuf.albedo.set_rgb(x, y, Vec3(0.2 + 0.6 * rng.next_double(),
                                           0.2 + 0.6 * rng.next_double(),
                                           0.2 + 0.6 * rng.next_double()));
    EnvironmentMap env = random_env(8, 4, rng);

    RefineConfig cfg;
    cfg.iterations = 5;
    cfg.spp_inner = 16;
    RenderSettings settings;
    settings.threads = 1;
    settings.seed = 0;

    RenderSettings inner = settings;
    inner.spp = cfg.spp_inner;
    RadianceImage d, s;
    relight_frame_split(gbuf, env, inner, d, s);
    RadianceImage frame = compose(d, s, gbuf.albedo);

    RefineResult result = refine_properties(gbuf, frame, env, cfg, settings);
    REQUIRE_FALSE(result.loss_trace.empty());
    CHECK(result.loss_trace.front() == 0.0);
    for (double v : result.loss_trace) CHECK(v == 0.0);
    CHECK(same_bits(result.gbuf.albedo, gbuf.albedo));
    CHECK(same_bits(result.gbuf.roughness, gbuf.roughness));
    CHECK_FALSE(result.stalled);
}

TEST_CASE("corrupted albedo is recovered from the rendered frame") {
    // Forward-render oracle: the frame comes from the true buffer; the
    // solver starts from a per-pixel corrupted albedo with no consistency
    // anchor and must walk back to the truth.
    Pcg32 rng(83);
    GBuffer truth = random_gbuffer(8, 8, rng, /*lambert_materials=*/true);
    EnvironmentMap env = random_env(8, 4, rng);

    RefineConfig cfg;
    cfg.delta = 0.0;
    cfg.iterations = 200;
    cfg.spp_inner = 64;
    RenderSettings settings = lambert_settings(cfg.spp_inner, 0);

    RenderSettings inner = settings;
    inner.spp = cfg.spp_inner;
    RadianceImage d, s;
    relight_frame_split(truth, env, inner, d, s);
    RadianceImage frame = compose(d, s, truth.albedo);

    GBuffer corrupted = truth;
    for (float &v : corrupted.albedo.data())
        v = std::min(1.f, v * float(0.5 + rng.next_double()));

    RefineResult result = refine_properties(corrupted, frame, env, cfg, settings);

    for (size_t i = 1; i < result.loss_trace.size(); ++i)
        CHECK(result.loss_trace[i] <= result.loss_trace[i - 1]);

    std::vector<double> rel_err;
    for (size_t i = 0; i < truth.albedo.size(); ++i) {
        double t = truth.albedo.data()[i];
        rel_err.push_back(std::abs(result.gbuf.albedo.data()[i] - t) / t);
    }
    std::nth_element(rel_err.begin(), rel_err.begin() + rel_err.size() / 2,
                     rel_err.end());
    CHECK(rel_err[rel_err.size() / 2] < 0.05);
}

TEST_CASE("a large consistency weight anchors the properties") {
    Pcg32 rng(97);
    GBuffer gbuf = random_gbuffer(6, 6, rng);
    EnvironmentMap env = random_env(8, 4, rng);
    RadianceImage frame = constant_image(6, 6, 3, 0.5f);

    RefineConfig cfg;
    cfg.delta = 1000.0;
    cfg.iterations = 30;
    cfg.spp_inner = 16;
    RenderSettings settings;
    settings.threads = 1;

    RefineResult result = refine_properties(gbuf, frame, env, cfg, settings);
    CHECK(image_rms(result.gbuf.albedo, gbuf.albedo) < 1e-2);
    CHECK(image_rms(result.gbuf.roughness, gbuf.roughness) < 1e-2);
}

TEST_CASE("refinement validates its frame and configuration") {
    GBuffer gbuf = flat_gbuffer(6, 6, Vec3(0.5, 0.5, 0.5));
    EnvironmentMap env = constant_env(8, 4, Vec3(1, 1, 1));
    RadianceImage frame = constant_image(6, 6, 3, 0.3f);
    RefineConfig cfg;
    cfg.iterations = 1;
    cfg.spp_inner = 4;

    CHECK_THROWS_WITH_AS(
        refine_properties(gbuf, constant_image(5, 6, 3, 0.3f), env, cfg),
        doctest::Contains("6x6"), ValidationError);

    RadianceImage bad = frame;
    bad.at(1, 1, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_WITH_AS(refine_properties(gbuf, bad, env, cfg),
                         doctest::Contains("non-finite"), ValidationError);

    RefineConfig bad_cfg;
    bad_cfg.delta = -1.0;
    CHECK_THROWS_AS(refine_properties(gbuf, frame, env, bad_cfg), ValidationError);
    bad_cfg = RefineConfig{};
    bad_cfg.iterations = -1;
    CHECK_THROWS_AS(refine_properties(gbuf, frame, env, bad_cfg), ValidationError);
    bad_cfg = RefineConfig{};
    bad_cfg.step_size = 0.0;
    CHECK_THROWS_AS(refine_properties(gbuf, frame, env, bad_cfg), ValidationError);
    bad_cfg = RefineConfig{};
    bad_cfg.spp_inner = 0;
    CHECK_THROWS_AS(refine_properties(gbuf, frame, env, bad_cfg), ValidationError);
}
