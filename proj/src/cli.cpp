// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "relit/envmap.hpp"
#include "relit/episode.hpp"
#include "relit/errors.hpp"
#include "relit/gbuffer.hpp"
#include "relit/image_io.hpp"
#include "relit/mesh.hpp"
#include "relit/metrics.hpp"
#include "relit/optimize.hpp"
#include "relit/render.hpp"
#include "relit/temporal.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace relit {

namespace {

std::string trim(const std::string &s) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// Injects config-file entries as trailing "--key=value" tokens for every key
// the command line does not already set, giving the documented precedence:
// built-in defaults < config file < explicit flags.
std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::string cfg_path;
    for (size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            cfg_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            cfg_path = args[i].substr(9);
    }
    if (cfg_path.empty()) return args;

    std::ifstream in(cfg_path);
    if (!in) throw IoError("cannot open config file: " + cfg_path);
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("malformed config line (expected key = value): " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ValidationError("malformed config line (empty key): " + line);
        std::string flag = "--" + key;
        bool present = false;
        for (size_t i = 1; i < args.size() && !present; ++i)
            present = args[i] == flag || args[i].rfind(flag + "=", 0) == 0;
        if (!present) args.push_back(flag + "=" + value);
    }
    return args;
}

struct GlobalOpts {
    int threads = 0;
    uint64_t seed = 0;
    bool verbose = false;
    std::string config;
};

void add_global(CLI::App *sub, GlobalOpts &g) {
    sub->add_option("--threads", g.threads, "worker threads (0 = all cores)");
    sub->add_option("--seed", g.seed, "random seed");
    sub->add_option("--config", g.config, "file of key = value flag defaults");
    sub->add_flag("--verbose", g.verbose, "report progress on stderr");
}

struct RunContext {
    std::string subcommand;
    json params = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    std::string manifest_dir;  // set from the primary output path
    uint64_t seed = 0;
};

// Manifest directory: the output directory itself, or the parent of an
// output file.
std::string manifest_dir_for(const std::string &out_path, bool out_is_dir) {
    if (out_is_dir) return out_path;
    fs::path parent = fs::path(out_path).parent_path();
    return parent.empty() ? std::string(".") : parent.string();
}

void write_manifest(const RunContext &ctx, double seconds, const std::string &status,
                    const std::string &error) {
    json j;
    j["subcommand"] = ctx.subcommand;
    j["parameters"] = ctx.params;
    j["seed"] = ctx.seed;
    j["inputs"] = ctx.inputs;
    j["outputs"] = ctx.outputs;
    j["wall_clock_seconds"] = seconds;
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    j["warnings"] = ctx.warnings;

    fs::path dir = ctx.manifest_dir.empty() ? fs::path(".") : fs::path(ctx.manifest_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    fs::path tmp = dir / "manifest.json.tmp";
    fs::path final_path = dir / "manifest.json";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << j.dump(2) << "\n";
        if (!out) throw IoError("cannot write manifest: " + tmp.string());
    }
    fs::rename(tmp, final_path, ec);
    if (ec) throw IoError("cannot move manifest into place: " + final_path.string());
}

// Runs a subcommand body, maps exceptions to exit codes (1 = validation,
// 2 = I/O) and always leaves a manifest behind. The directory holding the
// primary output (and the manifest) is created up front so `--out a/b/c.png`
// works without a preexisting `a/b/`.
int run_command(RunContext &ctx, bool verbose, const std::function<void()> &body) {
    if (!ctx.manifest_dir.empty()) {
        std::error_code ec;
        fs::create_directories(ctx.manifest_dir, ec);
    }
    auto t0 = std::chrono::steady_clock::now();
    std::string status = "ok", error;
    int code = 0;
    try {
        body();
    } catch (const ValidationError &e) {
        status = "validation_error";
        error = e.what();
        code = 1;
    } catch (const IoError &e) {
        status = "io_error";
        error = e.what();
        code = 2;
    } catch (const std::exception &e) {
        status = "error";
        error = e.what();
        code = 1;
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try {
        write_manifest(ctx, seconds, status, error);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        if (code == 0) code = 2;
    }

    for (const auto &w : ctx.warnings) std::cerr << "warning: " << w << "\n";
    if (!error.empty()) std::cerr << "error: " << error << "\n";
    if (verbose)
        std::cerr << ctx.subcommand << ": " << status << " in " << seconds << " s\n";
    return code;
}

BrdfMode parse_mode(const std::string &s) {
    if (s == "disney") return BrdfMode::Disney;
    if (s == "lambert") return BrdfMode::Lambert;
    throw ValidationError("unknown brdf mode '" + s + "' (expected disney or lambert)");
}

void parse_resolution(const std::string &s, int &w, int &h) {
    char extra;
    if (std::sscanf(s.c_str(), "%dx%d%c", &w, &h, &extra) != 2 || w < 1 || h < 1)
        throw ValidationError("resolution must look like 32x16, got '" + s + "'");
}

Vec3 parse_rgb(const std::string &s) {
    Vec3 v;
    char extra;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf%c", &v.x, &v.y, &v.z, &extra) != 3)
        throw ValidationError("color must look like R,G,B, got '" + s + "'");
    return v;
}

// Binary foreground mask from an 8-bit grayscale PNG; encoded values of at
// least half intensity (255 = keep) select the pixel.
RadianceImage load_mask(const std::string &path) {
    RadianceImage img = load_png(path);
    const float threshold = float(srgb_decode(0.5));
    RadianceImage mask(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            mask.at(x, y) = img.at(x, y, 0) >= threshold ? 1.f : 0.f;
    return mask;
}

// Frame sequence from an episode directory (frames/ subdir) or a plain
// directory of .png/.pfm images, in filename order.
std::vector<RadianceImage> load_frames_dir(const std::string &dir) {
    fs::path p(dir);
    if (fs::is_directory(p / "frames")) p /= "frames";
    if (!fs::is_directory(p)) throw IoError("not a directory: " + p.string());
    std::vector<std::string> names;
    for (const auto &entry : fs::directory_iterator(p)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pfm") names.push_back(entry.path().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty())
        throw IoError("no frames (*.png / *.pfm) found in " + p.string());
    std::vector<RadianceImage> frames;
    frames.reserve(names.size());
    for (const auto &n : names) frames.push_back(load_image(n));
    return frames;
}

RenderSettings make_settings(const GlobalOpts &g, int spp, const std::string &mode,
                             double exposure) {
    RenderSettings s;
    s.spp = spp;
    s.mode = parse_mode(mode);
    s.seed = g.seed;
    s.threads = g.threads;
    s.exposure = exposure;
    return s;
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void register_relight(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string gbuffer, env, out, mode = "disney";
        int spp = 256;
        double exposure = 1.0;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "relight", "Re-render a G-buffer under an environment map");
    sub->add_option("--gbuffer", o->gbuffer, "G-buffer directory")->required();
    sub->add_option("--env", o->env, "environment map (.pfm)")->required();
    sub->add_option("--spp", o->spp, "samples per pixel");
    sub->add_option("--mode", o->mode, "brdf mode: disney or lambert");
    sub->add_option("--exposure", o->exposure, "radiance multiplier");
    sub->add_option("--out", o->out, "output image (.png or .pfm)")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "relight";
        ctx.seed = o->g.seed;
        ctx.params = {{"gbuffer", o->gbuffer}, {"env", o->env},       {"spp", o->spp},
                      {"mode", o->mode},       {"exposure", o->exposure},
                      {"out", o->out},         {"threads", o->g.threads}};
        ctx.inputs = {o->gbuffer, o->env};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, false);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            GBuffer gbuf = load_gbuffer(o->gbuffer);
            EnvironmentMap env = EnvironmentMap::load(o->env);
            RenderSettings s = make_settings(o->g, o->spp, o->mode, o->exposure);
            save_image(relight_frame(gbuf, env, s), o->out);
        });
    });
}

void register_estimate_env(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string gbuffer, frame, out, res = "32x16", mode = "disney";
        double ridge = 1e-3, tol = 1e-4;
        int max_iters = 500;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "estimate-env", "Recover an environment map from one frame and its G-buffer");
    sub->add_option("--gbuffer", o->gbuffer, "G-buffer directory")->required();
    sub->add_option("--frame", o->frame, "observed frame (.png or .pfm)")->required();
    sub->add_option("--res", o->res, "environment resolution WxH");
    sub->add_option("--ridge", o->ridge, "Tikhonov weight");
    sub->add_option("--max-iters", o->max_iters, "solver iteration cap");
    sub->add_option("--tol", o->tol, "relative improvement stop");
    sub->add_option("--mode", o->mode, "brdf mode: disney or lambert");
    sub->add_option("--out", o->out, "output environment map (.pfm)")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "estimate-env";
        ctx.seed = o->g.seed;
        ctx.params = {{"gbuffer", o->gbuffer},   {"frame", o->frame}, {"res", o->res},
                      {"ridge", o->ridge},       {"max_iters", o->max_iters},
                      {"tol", o->tol},           {"mode", o->mode},
                      {"out", o->out},           {"threads", o->g.threads}};
        ctx.inputs = {o->gbuffer, o->frame};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, false);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            EnvEstimateConfig cfg;
            parse_resolution(o->res, cfg.env_width, cfg.env_height);
            cfg.ridge = o->ridge;
            cfg.max_iters = o->max_iters;
            cfg.tol = o->tol;
            GBuffer gbuf = load_gbuffer(o->gbuffer);
            RadianceImage frame = load_image(o->frame);
            RenderSettings s = make_settings(o->g, 1, o->mode, 1.0);
            EnvEstimateResult result = estimate_envmap(gbuf, frame, cfg, s);
            result.env.save(o->out);
            if (!result.converged)
                ctx.warnings.push_back(
                    "solver stopped at max_iters=" + std::to_string(cfg.max_iters) +
                    "; relative residual " + format_g17(result.relative_residual));
            if (o->g.verbose)
                std::cerr << "estimate-env: " << result.iterations
                          << " iterations, relative residual "
                          << result.relative_residual << "\n";
        });
    });
}

void register_refine(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string gbuffer, frame, env, out, mode = "disney";
        double delta = 0.1, step = 0.05;
        int iters = 200, spp_inner = 64;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "refine", "Refine albedo/roughness against an observed frame");
    sub->add_option("--gbuffer", o->gbuffer, "initial G-buffer directory")->required();
    sub->add_option("--frame", o->frame, "observed frame (.png or .pfm)")->required();
    sub->add_option("--env", o->env, "known environment map (.pfm)")->required();
    sub->add_option("--delta", o->delta, "consistency weight");
    sub->add_option("--iters", o->iters, "optimizer iterations");
    sub->add_option("--step", o->step, "initial gradient step");
    sub->add_option("--spp-inner", o->spp_inner, "samples per pixel for loss renders");
    sub->add_option("--mode", o->mode, "brdf mode: disney or lambert");
    sub->add_option("--out", o->out, "output G-buffer directory")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "refine";
        ctx.seed = o->g.seed;
        ctx.params = {{"gbuffer", o->gbuffer}, {"frame", o->frame},
                      {"env", o->env},         {"delta", o->delta},
                      {"iters", o->iters},     {"step", o->step},
                      {"spp_inner", o->spp_inner}, {"mode", o->mode},
                      {"out", o->out},         {"threads", o->g.threads}};
        ctx.inputs = {o->gbuffer, o->frame, o->env};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, true);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            GBuffer gbuf = load_gbuffer(o->gbuffer);
            RadianceImage frame = load_image(o->frame);
            EnvironmentMap env = EnvironmentMap::load(o->env);
            RefineConfig cfg;
            cfg.delta = o->delta;
            cfg.iterations = o->iters;
            cfg.step_size = o->step;
            cfg.spp_inner = o->spp_inner;
            RenderSettings s = make_settings(o->g, 256, o->mode, 1.0);
            RefineResult result = refine_properties(gbuf, frame, env, cfg, s);
            save_gbuffer(result.gbuf, o->out);
            if (result.stalled)
                ctx.warnings.push_back("optimizer stalled after " +
                                       std::to_string(result.loss_trace.size() - 1) +
                                       " accepted steps");
            if (o->g.verbose && !result.loss_trace.empty())
                std::cerr << "refine: loss " << result.loss_trace.front() << " -> "
                          << result.loss_trace.back() << " over "
                          << result.loss_trace.size() - 1 << " accepted steps\n";
        });
    });
}

void register_mesh(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string gbuffer, out;
        double ratio = 1.1;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub =
        app.add_subcommand("mesh", "Triangulate the depth map into an OBJ mesh");
    sub->add_option("--gbuffer", o->gbuffer, "G-buffer directory")->required();
    sub->add_option("--ratio", o->ratio, "depth discontinuity drop ratio");
    sub->add_option("--out", o->out, "output mesh (.obj)")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "mesh";
        ctx.seed = o->g.seed;
        ctx.params = {{"gbuffer", o->gbuffer}, {"ratio", o->ratio}, {"out", o->out}};
        ctx.inputs = {o->gbuffer};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, false);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            GBuffer gbuf = load_gbuffer(o->gbuffer);
            TriMesh mesh = depth_to_mesh(gbuf.depth, gbuf.intrinsics, o->ratio);
            save_mesh_obj(mesh, o->out);
            if (o->g.verbose)
                std::cerr << "mesh: " << mesh.vertices.size() << " vertices, "
                          << mesh.faces.size() << " faces\n";
        });
    });
}

void register_background(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string gbuffer, mask, env, out, mode = "disney";
        int spp = 256;
        double exposure = 1.0, ratio = 1.1;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "background", "Re-render the scene mesh under a new environment map");
    sub->add_option("--gbuffer", o->gbuffer, "G-buffer directory")->required();
    sub->add_option("--mask", o->mask, "foreground keep mask (.png, 255 = keep)")
        ->required();
    sub->add_option("--env", o->env, "environment map (.pfm)")->required();
    sub->add_option("--spp", o->spp, "samples per pixel");
    sub->add_option("--mode", o->mode, "brdf mode: disney or lambert");
    sub->add_option("--exposure", o->exposure, "radiance multiplier");
    sub->add_option("--ratio", o->ratio, "depth discontinuity drop ratio");
    sub->add_option("--out", o->out, "output image (.png or .pfm)")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "background";
        ctx.seed = o->g.seed;
        ctx.params = {{"gbuffer", o->gbuffer}, {"mask", o->mask}, {"env", o->env},
                      {"spp", o->spp},         {"mode", o->mode},
                      {"exposure", o->exposure}, {"ratio", o->ratio},
                      {"out", o->out},         {"threads", o->g.threads}};
        ctx.inputs = {o->gbuffer, o->mask, o->env};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, false);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            GBuffer gbuf = load_gbuffer(o->gbuffer);
            RadianceImage keep = load_mask(o->mask);
            EnvironmentMap env = EnvironmentMap::load(o->env);
            TriMesh mesh = depth_to_mesh(gbuf.depth, gbuf.intrinsics, o->ratio);
            RenderSettings s = make_settings(o->g, o->spp, o->mode, o->exposure);
            save_image(render_background(mesh, gbuf, keep, env, s), o->out);
        });
    });
}

void register_propagate(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string episode, relit_first, out;
        double epsilon = 1e-3, gain_max = 8.0;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "propagate", "Transfer a frame-0 relight to a whole episode");
    sub->add_option("--episode", o->episode, "input episode directory")->required();
    sub->add_option("--relit-first", o->relit_first, "relit frame 0 (.png or .pfm)")
        ->required();
    sub->add_option("--epsilon", o->epsilon, "quotient stabilizer");
    sub->add_option("--gain-max", o->gain_max, "gain clamp");
    sub->add_option("--out", o->out, "output episode directory")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "propagate";
        ctx.seed = o->g.seed;
        ctx.params = {{"episode", o->episode},   {"relit_first", o->relit_first},
                      {"epsilon", o->epsilon},   {"gain_max", o->gain_max},
                      {"out", o->out}};
        ctx.inputs = {o->episode, o->relit_first};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, true);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            Episode ep = load_episode(o->episode);
            RadianceImage relit0 = load_image(o->relit_first);
            QuotientMap qmap = quotient_map(ep.frames[0], relit0, o->epsilon, o->gain_max);
            Episode out_ep = ep;
            out_ep.frames = propagate(ep.frames, qmap);
            save_episode(out_ep, o->out);
        });
    });
}

void register_augment(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string episode, gbuffer, envs, out, mode = "disney";
        bool refine = false;
        int spp = 256, iters = 200, spp_inner = 64;
        double delta = 0.1, exposure = 1.0;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "augment", "Emit one relit episode per environment map");
    sub->add_option("--episode", o->episode, "input episode directory")->required();
    sub->add_option("--gbuffer", o->gbuffer, "frame-0 G-buffer directory")->required();
    sub->add_option("--envs", o->envs, "comma-separated environment maps (.pfm)")
        ->required();
    sub->add_flag("--refine", o->refine,
                  "estimate frame-0 lighting and refine albedo/roughness first");
    sub->add_option("--spp", o->spp, "samples per pixel");
    sub->add_option("--mode", o->mode, "brdf mode: disney or lambert");
    sub->add_option("--exposure", o->exposure, "radiance multiplier");
    sub->add_option("--delta", o->delta, "refinement consistency weight");
    sub->add_option("--iters", o->iters, "refinement iterations");
    sub->add_option("--spp-inner", o->spp_inner, "refinement loss render spp");
    sub->add_option("--out", o->out, "output directory (env_NNN episodes)")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "augment";
        ctx.seed = o->g.seed;
        ctx.params = {{"episode", o->episode}, {"gbuffer", o->gbuffer},
                      {"envs", o->envs},       {"refine", o->refine},
                      {"spp", o->spp},         {"mode", o->mode},
                      {"exposure", o->exposure}, {"delta", o->delta},
                      {"iters", o->iters},     {"spp_inner", o->spp_inner},
                      {"out", o->out},         {"threads", o->g.threads}};
        ctx.inputs = {o->episode, o->gbuffer};
        ctx.manifest_dir = manifest_dir_for(o->out, true);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            std::vector<std::string> env_paths;
            std::stringstream ss(o->envs);
            for (std::string item; std::getline(ss, item, ',');)
                if (!trim(item).empty()) env_paths.push_back(trim(item));
            if (env_paths.empty())
                throw ValidationError("augment: --envs lists no environment maps");
            for (const auto &p : env_paths) ctx.inputs.push_back(p);

            Episode ep = load_episode(o->episode);
            GBuffer gbuf = load_gbuffer(o->gbuffer);

            // A bad environment file only loses its own slot.
            std::vector<EnvironmentMap> envs;
            std::vector<size_t> env_slot;
            std::vector<std::string> slot_error(env_paths.size());
            for (size_t i = 0; i < env_paths.size(); ++i) {
                try {
                    envs.push_back(EnvironmentMap::load(env_paths[i]));
                    env_slot.push_back(i);
                } catch (const std::exception &e) {
                    slot_error[i] = e.what();
                }
            }

            AugmentConfig acfg;
            acfg.refine = o->refine;
            acfg.refine_cfg.delta = o->delta;
            acfg.refine_cfg.iterations = o->iters;
            acfg.refine_cfg.spp_inner = o->spp_inner;
            RenderSettings s = make_settings(o->g, o->spp, o->mode, o->exposure);

            if (!envs.empty()) {
                AugmentResult result = augment_episode(ep, gbuf, envs, s, acfg);
                if (!result.estimate_converged)
                    ctx.warnings.push_back("lighting estimation stopped at max_iters");
                for (size_t k = 0; k < result.items.size(); ++k) {
                    if (result.items[k].ok) {
                        char name[32];
                        std::snprintf(name, sizeof(name), "env_%03zu", env_slot[k]);
                        std::string dir = (fs::path(o->out) / name).string();
                        save_episode(result.items[k].episode, dir);
                        ctx.outputs.push_back(dir);
                    } else {
                        slot_error[env_slot[k]] = result.items[k].error;
                    }
                }
            }
            for (size_t i = 0; i < env_paths.size(); ++i)
                if (!slot_error[i].empty())
                    ctx.warnings.push_back("environment " + env_paths[i] +
                                           " failed: " + slot_error[i]);
            if (ctx.outputs.empty())
                throw ValidationError("augment: every environment failed (first: " +
                                      slot_error[0] + ")");
        });
    });
}

void register_degrade(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string episode, out;
        double brightness = 1.0, contrast = 1.0, saturation = 1.0, hue = 0.0;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "degrade", "Photometrically degrade an episode (one jitter sample per episode)");
    sub->add_option("--episode", o->episode, "input episode directory")->required();
    auto *ob = sub->add_option("--brightness", o->brightness, "override sampled value");
    auto *oc = sub->add_option("--contrast", o->contrast, "override sampled value");
    auto *os = sub->add_option("--saturation", o->saturation, "override sampled value");
    auto *oh = sub->add_option("--hue", o->hue, "override sampled value (turns)");
    sub->add_option("--out", o->out, "output episode directory")->required();
    add_global(sub, o->g);
    sub->callback([o, ob, oc, os, oh, &exit_code] {
        JitterParams p = sample_jitter(o->g.seed);
        if (ob->count()) p.brightness = o->brightness;
        if (oc->count()) p.contrast = o->contrast;
        if (os->count()) p.saturation = o->saturation;
        if (oh->count()) p.hue = o->hue;

        RunContext ctx;
        ctx.subcommand = "degrade";
        ctx.seed = o->g.seed;
        ctx.params = {{"episode", o->episode},     {"brightness", p.brightness},
                      {"contrast", p.contrast},    {"saturation", p.saturation},
                      {"hue", p.hue},              {"out", o->out}};
        ctx.inputs = {o->episode};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, true);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            Episode ep = load_episode(o->episode);
            save_episode(degrade_episode(ep, p), o->out);
        });
    });
}

void register_texture(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string gbuffer, mask, albedo, env, out, mode = "disney";
        int spp = 256;
        double exposure = 1.0;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "texture", "Swap albedo inside a mask and relight");
    sub->add_option("--gbuffer", o->gbuffer, "G-buffer directory")->required();
    sub->add_option("--mask", o->mask, "segment mask (.png, 255 = replace)")->required();
    sub->add_option("--albedo", o->albedo, "replacement albedo R,G,B")->required();
    sub->add_option("--env", o->env, "environment map (.pfm)")->required();
    sub->add_option("--spp", o->spp, "samples per pixel");
    sub->add_option("--mode", o->mode, "brdf mode: disney or lambert");
    sub->add_option("--exposure", o->exposure, "radiance multiplier");
    sub->add_option("--out", o->out, "output image (.png or .pfm)")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "texture";
        ctx.seed = o->g.seed;
        ctx.params = {{"gbuffer", o->gbuffer}, {"mask", o->mask},
                      {"albedo", o->albedo},   {"env", o->env},
                      {"spp", o->spp},         {"mode", o->mode},
                      {"exposure", o->exposure}, {"out", o->out},
                      {"threads", o->g.threads}};
        ctx.inputs = {o->gbuffer, o->mask, o->env};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, false);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            GBuffer gbuf = load_gbuffer(o->gbuffer);
            RadianceImage mask = load_mask(o->mask);
            Vec3 rgb = parse_rgb(o->albedo);
            EnvironmentMap env = EnvironmentMap::load(o->env);
            RenderSettings s = make_settings(o->g, o->spp, o->mode, o->exposure);
            GBuffer swapped = swap_albedo(gbuf, mask, rgb);
            save_image(relight_frame(swapped, env, s), o->out);
        });
    });
}

void register_metrics(CLI::App &app, int &exit_code) {
    struct Opts {
        GlobalOpts g;
        std::string ref, test, out;
    };
    auto o = std::make_shared<Opts>();
    CLI::App *sub = app.add_subcommand(
        "metrics", "SSIM/PSNR report between two frame sequences");
    sub->add_option("--ref", o->ref, "reference episode or frame directory")->required();
    sub->add_option("--test", o->test, "test episode or frame directory")->required();
    sub->add_option("--out", o->out, "output report (.csv)")->required();
    add_global(sub, o->g);
    sub->callback([o, &exit_code] {
        RunContext ctx;
        ctx.subcommand = "metrics";
        ctx.seed = o->g.seed;
        ctx.params = {{"ref", o->ref}, {"test", o->test}, {"out", o->out}};
        ctx.inputs = {o->ref, o->test};
        ctx.outputs = {o->out};
        ctx.manifest_dir = manifest_dir_for(o->out, false);
        exit_code = run_command(ctx, o->g.verbose, [&] {
            std::vector<RadianceImage> ref = load_frames_dir(o->ref);
            std::vector<RadianceImage> test = load_frames_dir(o->test);
            if (ref.size() != test.size())
                throw ValidationError("metrics: reference has " +
                                      std::to_string(ref.size()) + " frames but test has " +
                                      std::to_string(test.size()));

            std::ostringstream csv;
            csv << "frame,ssim,psnr\n";
            double ssim_sum = 0.0;
            for (size_t t = 0; t < ref.size(); ++t) {
                double s = ssim(ref[t], test[t]);
                double p = psnr(ref[t], test[t]);
                ssim_sum += s;
                csv << t << ',' << format_g17(s) << ',' << format_g17(p) << '\n';
            }
            csv << "mean_ssim," << format_g17(ssim_sum / double(ref.size())) << '\n';
            std::string tref =
                ref.size() >= 2 ? format_g17(temporal_ssim(ref)) : std::string("n/a");
            std::string ttest =
                test.size() >= 2 ? format_g17(temporal_ssim(test)) : std::string("n/a");
            csv << "temporal_ssim_ref," << tref << '\n';
            csv << "temporal_ssim_test," << ttest << '\n';

            std::ofstream out(o->out, std::ios::binary);
            if (!out) throw IoError("cannot open report for writing: " + o->out);
            out << csv.str();
            if (!out) throw IoError("failed writing report: " + o->out);

            // Perceptual metrics need a learned model; keep the report shape.
            std::cout << csv.str() << "lpips,n/a\ntemporal_lpips,n/a\n";
        });
    });
}

}  // namespace

int dispatch(const std::vector<std::string> &args_in) {
    std::vector<std::string> args;
    try {
        args = apply_config(args_in);
    } catch (const ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Physically based G-buffer relighting and episode augmentation"};
    app.require_subcommand(1);
    int exit_code = 0;
    register_relight(app, exit_code);
    register_estimate_env(app, exit_code);
    register_refine(app, exit_code);
    register_mesh(app, exit_code);
    register_background(app, exit_code);
    register_propagate(app, exit_code);
    register_augment(app, exit_code);
    register_degrade(app, exit_code);
    register_texture(app, exit_code);
    register_metrics(app, exit_code);

    std::vector<const char *> argv;
    argv.reserve(args.size());
    for (const auto &a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return exit_code;
}

int dispatch(int argc, const char *const argv[]) {
    return dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace relit
