// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/optimize.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "relit/brdf.hpp"
#include "relit/errors.hpp"
#include "relit/parallel.hpp"

namespace relit {

namespace {

constexpr int kMaxEnvTexels = 64 * 32;
constexpr double kRoughnessFdStep = 1e-2;

// RGB transport response of one shading point for every environment texel:
// row[j] = sum over sub-texel centers of brdf * clamped-cosine * solid angle.
void basis_row(const MaterialSample &mat, const Vec3 &n, const Vec3 &v, int env_w,
               int env_h, int subdivisions, BrdfMode mode, Vec3 *row) {
    const int s = subdivisions;
    const double dw_base = (kTwoPi / (env_w * s)) * (kPi / (env_h * s));
    for (int ty = 0; ty < env_h; ++ty) {
        for (int tx = 0; tx < env_w; ++tx) {
            Vec3 acc(0.0);
            for (int sy = 0; sy < s; ++sy) {
                for (int sx = 0; sx < s; ++sx) {
                    double u = (tx * s + sx + 0.5) / double(env_w * s);
                    double vv = (ty * s + sy + 0.5) / double(env_h * s);
                    Vec3 w = uv_to_dir(u, vv);
                    double cos_l = dot(n, w);
                    if (cos_l <= 0.0) continue;
                    double dw = dw_base * std::sin(kPi * vv);
                    acc += brdf_eval(mat, n, w, v, mode) * (cos_l * dw);
                }
            }
            row[ty * env_w + tx] = acc;
        }
    }
}

MaterialSample material_at(const GBuffer &gbuf, int x, int y) {
    MaterialSample mat;
    mat.albedo = gbuf.albedo.rgb(x, y);
    mat.roughness = gbuf.roughness.at(x, y);
    mat.metallic = gbuf.metallic.at(x, y);
    return mat;
}

void check_env_resolution(int env_w, int env_h) {
    if (env_w < 1 || env_h < 1)
        throw ValidationError("transport basis: environment resolution must be positive");
    if (env_w * env_h > kMaxEnvTexels)
        throw ValidationError("transport basis: environment resolution " +
                              std::to_string(env_w) + "x" + std::to_string(env_h) +
                              " exceeds the 64x32 limit");
}

}  // namespace

std::vector<RadianceImage> transport_basis(const GBuffer &gbuf, int env_width,
                                           int env_height, const RenderSettings &settings,
                                           int subdivisions) {
    check_env_resolution(env_width, env_height);
    if (subdivisions < 1 || subdivisions > 8)
        throw ValidationError("transport_basis: subdivisions must be in [1, 8]");

    const int w = gbuf.width(), h = gbuf.height();
    const int texels = env_width * env_height;
    std::vector<RadianceImage> basis(texels, RadianceImage(w, h, 3));
    parallel_for(0, h, settings.threads, [&](int64_t yy) {
        const int y = static_cast<int>(yy);
        std::vector<Vec3> row(texels);
        for (int x = 0; x < w; ++x) {
            basis_row(material_at(gbuf, x, y), gbuf.normal_at(x, y),
                      pixel_view_dir(gbuf.intrinsics, x, y), env_width, env_height,
                      subdivisions, settings.mode, row.data());
            for (int j = 0; j < texels; ++j) basis[j].set_rgb(x, y, row[j]);
        }
    });
    return basis;
}

namespace {

// Largest eigenvalue of the (symmetric, PSD) normal matrix, by power
// iteration from a fixed start vector.
double max_eigenvalue(const Eigen::MatrixXd &G) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(G.rows());
    v.normalize();
    double lambda = 0.0;
    for (int i = 0; i < 64; ++i) {
        Eigen::VectorXd gv = G * v;
        lambda = v.dot(gv);
        double norm = gv.norm();
        if (norm <= 0.0) return 0.0;
        v = gv / norm;
    }
    return lambda;
}

struct PgdOutcome {
    Eigen::VectorXd e;
    double objective = 0.0;
    int iterations = 0;
    bool converged = true;
};

// Projected gradient descent for min_{e>=0} e'Ge - 2g'e + bb + ridge e'e.
PgdOutcome solve_nnls(const Eigen::MatrixXd &G, const Eigen::VectorXd &g, double bb,
                      double ridge, int max_iters, double tol) {
    const auto J = G.rows();
    PgdOutcome out;
    out.e = Eigen::VectorXd::Zero(J);
    auto objective = [&](const Eigen::VectorXd &e) {
        return e.dot(G * e) - 2.0 * g.dot(e) + bb + ridge * e.squaredNorm();
    };
    out.objective = objective(out.e);
    if (bb <= 0.0) return out;  // zero target: zero is already optimal

    double lambda = max_eigenvalue(G) + ridge;
    double step = lambda > 0.0 ? 0.95 / (2.0 * lambda) : 1.0;

    out.converged = false;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd grad = 2.0 * (G * out.e - g + ridge * out.e);
        double prev = out.objective;
        double eta = step;
        Eigen::VectorXd cand;
        double cand_obj = prev;
        // The step bound comes from an eigenvalue estimate; halve on the rare
        // occasions it overshoots.
        for (int k = 0; k < 60; ++k) {
            cand = (out.e - eta * grad).cwiseMax(0.0);
            cand_obj = objective(cand);
            if (cand_obj <= prev) break;
            eta *= 0.5;
        }
        if (cand_obj > prev) break;  // no descent direction left
        out.e = cand;
        out.objective = cand_obj;
        out.iterations = it + 1;
        if (prev - cand_obj <= tol * std::max(prev, 1e-30)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

EnvEstimateResult estimate_envmap(const GBuffer &gbuf, const RadianceImage &frame,
                                  const EnvEstimateConfig &cfg,
                                  const RenderSettings &settings) {
    cfg.validate();
    check_env_resolution(cfg.env_width, cfg.env_height);
    const int w = gbuf.width(), h = gbuf.height();
    if (frame.width() != w || frame.height() != h || frame.channels() != 3)
        throw ValidationError("estimate_envmap: frame must be " + std::to_string(w) + "x" +
                              std::to_string(h) + "x3");
    frame.validate("estimate_envmap frame");

    // The product exposure * E is all the data constrains; pin exposure.
    RenderSettings est = settings;
    est.exposure = 1.0;

    const int J = cfg.env_width * cfg.env_height;
    const int subdivisions = 2;

    // Accumulate per-channel normal equations G = A'A, g = A'b in fixed-size
    // pixel blocks; block order is fixed, so the result does not depend on
    // the thread count.
    Eigen::MatrixXd G[3] = {Eigen::MatrixXd::Zero(J, J), Eigen::MatrixXd::Zero(J, J),
                            Eigen::MatrixXd::Zero(J, J)};
    Eigen::VectorXd gv[3] = {Eigen::VectorXd::Zero(J), Eigen::VectorXd::Zero(J),
                             Eigen::VectorXd::Zero(J)};
    double bb[3] = {0, 0, 0};

    const int rows_per_block = std::max(1, 2048 / std::max(1, w));
    std::vector<Vec3> rows(size_t(rows_per_block) * w * J);
    for (int y0 = 0; y0 < h; y0 += rows_per_block) {
        const int block_h = std::min(rows_per_block, h - y0);
        parallel_for(0, block_h, est.threads, [&](int64_t by) {
            const int y = y0 + static_cast<int>(by);
            for (int x = 0; x < w; ++x) {
                Vec3 *row = rows.data() + (size_t(by) * w + x) * J;
                basis_row(material_at(gbuf, x, y), gbuf.normal_at(x, y),
                          pixel_view_dir(gbuf.intrinsics, x, y), cfg.env_width,
                          cfg.env_height, subdivisions, est.mode, row);
            }
        });
        const int block_pixels = block_h * w;
        for (int c = 0; c < 3; ++c) {
            Eigen::MatrixXd A(block_pixels, J);
            Eigen::VectorXd b(block_pixels);
            for (int p = 0; p < block_pixels; ++p) {
                const Vec3 *row = rows.data() + size_t(p) * J;
                for (int j = 0; j < J; ++j)
                    A(p, j) = c == 0 ? row[j].x : (c == 1 ? row[j].y : row[j].z);
                int x = p % w, y = y0 + p / w;
                b(p) = frame.at(x, y, c);
            }
            G[c].noalias() += A.transpose() * A;
            gv[c].noalias() += A.transpose() * b;
            bb[c] += b.squaredNorm();
        }
    }

    EnvEstimateResult result;
    RadianceImage env_img(cfg.env_width, cfg.env_height, 3);
    double res2 = 0.0, target2 = bb[0] + bb[1] + bb[2];
    int iters = 0;
    bool converged = true;
    for (int c = 0; c < 3; ++c) {
        PgdOutcome sol = solve_nnls(G[c], gv[c], bb[c], cfg.ridge, cfg.max_iters, cfg.tol);
        iters = std::max(iters, sol.iterations);
        converged = converged && sol.converged;
        // Data term of the objective (the ridge part is not residual).
        double data = sol.objective - cfg.ridge * sol.e.squaredNorm();
        res2 += std::max(0.0, data);
        for (int ty = 0; ty < cfg.env_height; ++ty)
            for (int tx = 0; tx < cfg.env_width; ++tx)
                env_img.at(tx, ty, c) = static_cast<float>(sol.e(ty * cfg.env_width + tx));
    }
    result.env = EnvironmentMap::build_sampling_tables(env_img);
    result.relative_residual = target2 > 0.0 ? std::sqrt(res2 / target2) : 0.0;
    result.iterations = iters;
    result.converged = converged;
    return result;
}

double loss_lp(const RadianceImage &rendered, const RadianceImage &target,
               const GBuffer &props, const GBuffer &props_init, double delta) {
    if (!rendered.same_shape(target))
        throw ValidationError("loss_lp: rendered/target shape mismatch");
    if (delta < 0) throw ValidationError("loss_lp: delta must be >= 0");
    if (!props.albedo.same_shape(props_init.albedo) ||
        !props.roughness.same_shape(props_init.roughness) ||
        !props.metallic.same_shape(props_init.metallic) ||
        !props.normal.same_shape(props_init.normal) ||
        !props.depth.same_shape(props_init.depth))
        throw ValidationError("loss_lp: property map shapes differ from initial maps");

    double l_cons = mse(props.albedo, props_init.albedo) +
                    mse(props.roughness, props_init.roughness) +
                    mse(props.metallic, props_init.metallic) +
                    mse(props.normal, props_init.normal) +
                    mse(props.depth, props_init.depth);
    return mse(rendered, target) + delta * l_cons;
}

namespace {

// rendered = diffuse_coef (.) albedo + specular, channelwise.
RadianceImage compose_split(const RadianceImage &diffuse_coef,
                            const RadianceImage &specular, const RadianceImage &albedo) {
    RadianceImage out(diffuse_coef.width(), diffuse_coef.height(), 3);
    for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] = diffuse_coef.data()[i] * albedo.data()[i] + specular.data()[i];
    return out;
}

// Split render with the specular F0 frozen at the initial albedo, so the
// composition above is the exact rendered image for any current albedo.
void split_frozen_f0(const GBuffer &init, const RadianceImage &roughness,
                     const EnvironmentMap &env, const RenderSettings &inner,
                     RadianceImage &diffuse_coef, RadianceImage &specular) {
    GBuffer g = init;
    g.roughness = roughness;
    relight_frame_split(g, env, inner, diffuse_coef, specular);
}

RadianceImage shift_map(const RadianceImage &m, double delta) {
    RadianceImage out = m;
    for (float &v : out.data()) v = static_cast<float>(v + delta);
    return out;
}

struct GradientInputs {
    const RadianceImage &diffuse_coef;
    const RadianceImage &rendered;
    const RadianceImage &d_rendered_d_rough;  // 3ch
};

// Per-pixel gradients (pixel count times the global-mean derivative).
RefineGradients gradients_from(const GradientInputs &in, const RadianceImage &albedo,
                               const RadianceImage &roughness, const GBuffer &init,
                               const RadianceImage &frame, double delta) {
    const int w = albedo.width(), h = albedo.height();
    RefineGradients g;
    g.albedo = RadianceImage(w, h, 3);
    g.roughness = RadianceImage(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double gr = 0.0;
            for (int c = 0; c < 3; ++c) {
                double err = double(in.rendered.at(x, y, c)) - frame.at(x, y, c);
                double ga = (2.0 / 3.0) * (err * in.diffuse_coef.at(x, y, c) +
                                           delta * (double(albedo.at(x, y, c)) -
                                                    init.albedo.at(x, y, c)));
                g.albedo.at(x, y, c) = static_cast<float>(ga);
                gr += (2.0 / 3.0) * err * in.d_rendered_d_rough.at(x, y, c);
            }
            gr += 2.0 * delta *
                  (double(roughness.at(x, y)) - init.roughness.at(x, y));
            g.roughness.at(x, y) = static_cast<float>(gr);
        }
    }
    return g;
}

RadianceImage fd_rendered_rough(const GBuffer &init, const RadianceImage &albedo,
                                const RadianceImage &roughness, const EnvironmentMap &env,
                                const RenderSettings &inner) {
    RadianceImage dp, sp, dm, sm;
    split_frozen_f0(init, shift_map(roughness, kRoughnessFdStep), env, inner, dp, sp);
    split_frozen_f0(init, shift_map(roughness, -kRoughnessFdStep), env, inner, dm, sm);
    RadianceImage ip = compose_split(dp, sp, albedo);
    RadianceImage im = compose_split(dm, sm, albedo);
    return scale(sub(ip, im), 1.0 / (2.0 * kRoughnessFdStep));
}

GBuffer with_properties(const GBuffer &init, const RadianceImage &albedo,
                        const RadianceImage &roughness) {
    GBuffer g = init;
    g.albedo = albedo;
    g.roughness = roughness;
    return g;
}

}  // namespace

RefineGradients refine_gradients(const GBuffer &cur, const GBuffer &init,
                                 const RadianceImage &frame, const EnvironmentMap &env,
                                 const RefineConfig &cfg, const RenderSettings &settings) {
    cfg.validate();
    RenderSettings inner = settings;
    inner.spp = cfg.spp_inner;

    RadianceImage D, S;
    split_frozen_f0(init, cur.roughness, env, inner, D, S);
    RadianceImage rendered = compose_split(D, S, cur.albedo);
    RadianceImage dIdR = fd_rendered_rough(init, cur.albedo, cur.roughness, env, inner);
    return gradients_from({D, rendered, dIdR}, cur.albedo, cur.roughness, init, frame,
                          cfg.delta);
}

RefineResult refine_properties(const GBuffer &gbuf_init, const RadianceImage &frame,
                               const EnvironmentMap &env, const RefineConfig &cfg,
                               const RenderSettings &settings) {
    cfg.validate();
    const int w = gbuf_init.width(), h = gbuf_init.height();
    if (frame.width() != w || frame.height() != h || frame.channels() != 3)
        throw ValidationError("refine_properties: frame must be " + std::to_string(w) +
                              "x" + std::to_string(h) + "x3");

    RefineResult result;
    result.gbuf = gbuf_init;
    if (cfg.iterations == 0) return result;

    RenderSettings inner = settings;
    inner.spp = cfg.spp_inner;

    RadianceImage albedo = gbuf_init.albedo;
    RadianceImage roughness = gbuf_init.roughness;

    RadianceImage D, S;
    split_frozen_f0(gbuf_init, roughness, env, inner, D, S);
    RadianceImage rendered = compose_split(D, S, albedo);
    double loss = loss_lp(rendered, frame, with_properties(gbuf_init, albedo, roughness),
                          gbuf_init, cfg.delta);
    if (!std::isfinite(loss)) throw ValidationError("refine_properties: non-finite loss");
    result.loss_trace.push_back(loss);

    for (int it = 0; it < cfg.iterations; ++it) {
        RadianceImage dIdR = fd_rendered_rough(gbuf_init, albedo, roughness, env, inner);
        RefineGradients grad =
            gradients_from({D, rendered, dIdR}, albedo, roughness, gbuf_init, frame,
                           cfg.delta);

        double eta = cfg.step_size;
        bool accepted = false;
        for (int half = 0; half <= 8 && !accepted; ++half) {
            RadianceImage a_cand(w, h, 3), r_cand(w, h, 1);
            for (size_t i = 0; i < a_cand.size(); ++i)
                a_cand.data()[i] = static_cast<float>(std::clamp(
                    double(albedo.data()[i]) - eta * grad.albedo.data()[i], 0.0, 1.0));
            for (size_t i = 0; i < r_cand.size(); ++i)
                r_cand.data()[i] = static_cast<float>(std::clamp(
                    double(roughness.data()[i]) - eta * grad.roughness.data()[i], 0.0,
                    1.0));

            RadianceImage d_cand, s_cand;
            split_frozen_f0(gbuf_init, r_cand, env, inner, d_cand, s_cand);
            RadianceImage rendered_cand = compose_split(d_cand, s_cand, a_cand);
            double loss_cand =
                loss_lp(rendered_cand, frame,
                        with_properties(gbuf_init, a_cand, r_cand), gbuf_init, cfg.delta);
            if (!std::isfinite(loss_cand))
                throw ValidationError("refine_properties: non-finite loss");
            if (loss_cand <= loss) {
                albedo = std::move(a_cand);
                roughness = std::move(r_cand);
                D = std::move(d_cand);
                S = std::move(s_cand);
                rendered = std::move(rendered_cand);
                loss = loss_cand;
                accepted = true;
            } else {
                eta *= 0.5;
            }
        }
        if (!accepted) {
            result.stalled = true;
            break;
        }
        result.loss_trace.push_back(loss);
    }

    result.gbuf = with_properties(gbuf_init, albedo, roughness);
    return result;
}

}  // namespace relit
