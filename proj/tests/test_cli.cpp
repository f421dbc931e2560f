// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "relit/cli.hpp"
#include "relit/episode.hpp"
#include "relit/gbuffer.hpp"
#include "relit/image_io.hpp"
#include "relit/render.hpp"

using namespace relit;
using namespace relit::testing;
using json = nlohmann::json;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "relit");
    return dispatch(args);
}

json manifest_at(const std::string &dir) {
    return json::parse(read_bytes((std::filesystem::path(dir) / "manifest.json").string()));
}

// A small scene on disk: G-buffer directory plus an environment map.
struct DiskScene {
    TempDir tmp;
    std::string gbuffer_dir;
    std::string env_path;
    GBuffer gbuf;
    EnvironmentMap env;

    explicit DiskScene(int w = 8, int h = 8) {
        Pcg32 rng(123);
        gbuf = random_gbuffer(w, h, rng);
        env = random_env(8, 4, rng);
        gbuffer_dir = tmp.str("gbuffer");
        env_path = tmp.str("env.pfm");
        save_gbuffer(gbuf, gbuffer_dir);
        env.save(env_path);
    }
};

Episode small_episode(int t, int w, int h, uint64_t seed, float hi = 1.f) {
    Pcg32 rng(seed);
    Episode ep;
    for (int i = 0; i < t; ++i) ep.frames.push_back(random_image(w, h, 3, rng, 0.f, hi));
    for (int i = 0; i < t; ++i) {
        ep.proprio.push_back({rng.next_double(), rng.next_double()});
        ep.actions.push_back({rng.next_double()});
    }
    ep.meta.emplace_back("task", "demo");
    return ep;
}

}  // namespace

TEST_CASE("relight runs from files, reruns identically, and logs a manifest") {
    DiskScene scene;
    std::string out1 = scene.tmp.str("render/out1.pfm");
    std::string out2 = scene.tmp.str("render/out2.pfm");

    int code = run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
                    "--spp", "16", "--out", out1, "--seed", "3", "--threads", "2"});
    REQUIRE(code == 0);
    REQUIRE(std::filesystem::exists(out1));

    json m = manifest_at(scene.tmp.str("render"));
    CHECK(m["subcommand"] == "relight");
    CHECK(m["status"] == "ok");
    CHECK(m["seed"] == 3);
    CHECK(m["parameters"]["spp"] == 16);
    CHECK(m["inputs"].size() == 2);
    CHECK(m["outputs"][0] == out1);
    CHECK(m["wall_clock_seconds"].get<double>() >= 0.0);

    // Same seed, different thread count: byte-identical output.
    code = run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
                "--spp", "16", "--out", out2, "--seed", "3", "--threads", "1"});
    REQUIRE(code == 0);
    CHECK(read_bytes(out1) == read_bytes(out2));

    // A different seed must actually reach the sampler.
    std::string out3 = scene.tmp.str("render/out3.pfm");
    code = run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
                "--spp", "16", "--out", out3, "--seed", "4"});
    REQUIRE(code == 0);
    CHECK(read_bytes(out1) != read_bytes(out3));
}

TEST_CASE("bad invocations exit with the documented codes") {
    CHECK(run({"frobnicate"}) == 1);
    CHECK(run({"--help"}) == 0);
    CHECK(run({}) == 1);
    CHECK(run({"relight", "--help"}) == 0);
}

TEST_CASE("validation failures are recorded in the manifest") {
    DiskScene scene;
    std::string out = scene.tmp.str("bad/out.png");
    int code = run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
                    "--mode", "phong", "--out", out});
    CHECK(code == 1);
    CHECK_FALSE(std::filesystem::exists(out));
    json m = manifest_at(scene.tmp.str("bad"));
    CHECK(m["status"] == "validation_error");
    std::string err = m["error"].get<std::string>();
    CHECK(err.find("phong") != std::string::npos);
}

TEST_CASE("missing inputs are io errors") {
    TempDir tmp;
    int code = run({"relight", "--gbuffer", tmp.str("nowhere"), "--env",
                    tmp.str("missing.pfm"), "--out", tmp.str("io/out.png")});
    CHECK(code == 2);
    json m = manifest_at(tmp.str("io"));
    CHECK(m["status"] == "io_error");
}

TEST_CASE("config file fills in defaults but explicit flags win") {
    DiskScene scene;
    write_bytes(scene.tmp.str("relit.cfg"),
                "# defaults for this dataset\nspp = 7\nmode = lambert\n");

    std::string out = scene.tmp.str("cfg/a.pfm");
    int code = run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
                    "--config", scene.tmp.str("relit.cfg"), "--spp", "9", "--out", out});
    REQUIRE(code == 0);
    json m = manifest_at(scene.tmp.str("cfg"));
    CHECK(m["parameters"]["spp"] == 9);           // flag beats config
    CHECK(m["parameters"]["mode"] == "lambert");  // config beats default

    code = run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
                "--config", scene.tmp.str("relit.cfg"), "--out", out});
    REQUIRE(code == 0);
    m = manifest_at(scene.tmp.str("cfg"));
    CHECK(m["parameters"]["spp"] == 7);

    write_bytes(scene.tmp.str("broken.cfg"), "spp\n");
    CHECK(run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
               "--config", scene.tmp.str("broken.cfg"), "--out", out}) == 1);
    CHECK(run({"relight", "--gbuffer", scene.gbuffer_dir, "--env", scene.env_path,
               "--config", scene.tmp.str("absent.cfg"), "--out", out}) == 2);
}

TEST_CASE("metrics writes per-frame rows plus sequence summaries") {
    TempDir tmp;
    Episode ep = small_episode(2, 16, 16, 7);
    save_episode(ep, tmp.str("ref"));
    save_episode(ep, tmp.str("test"));

    std::string out = tmp.str("report/report.csv");
    REQUIRE(run({"metrics", "--ref", tmp.str("ref"), "--test", tmp.str("test"), "--out",
                 out}) == 0);

    std::string csv = read_bytes(out);
    std::vector<std::string> lines;
    for (size_t pos = 0; pos < csv.size();) {
        size_t nl = csv.find('\n', pos);
        lines.push_back(csv.substr(pos, nl - pos));
        pos = nl == std::string::npos ? csv.size() : nl + 1;
    }
    REQUIRE(lines.size() >= 6);
    CHECK(lines[0] == "frame,ssim,psnr");
    CHECK(lines[1] == "0,1,99");  // identical frames: perfect score, capped psnr
    CHECK(lines[2] == "1,1,99");
    CHECK(lines[3] == "mean_ssim,1");
    CHECK(lines[4].rfind("temporal_ssim_ref,", 0) == 0);
    CHECK(lines[5].rfind("temporal_ssim_test,", 0) == 0);
    CHECK(lines[4].substr(18) == lines[5].substr(19));

    Episode shorter = small_episode(1, 16, 16, 8);
    save_episode(shorter, tmp.str("short"));
    CHECK(run({"metrics", "--ref", tmp.str("ref"), "--test", tmp.str("short"), "--out",
               out}) == 1);
}

TEST_CASE("propagate rewrites frames and copies the records byte-for-byte") {
    TempDir tmp;
    Episode ep = small_episode(3, 8, 8, 21, 0.45f);
    save_episode(ep, tmp.str("ep"));

    Episode saved = load_episode(tmp.str("ep"));
    RadianceImage relit0 = scale(saved.frames[0], 2.0);
    save_image(relit0, tmp.str("relit0.pfm"));

    std::string out = tmp.str("prop");
    REQUIRE(run({"propagate", "--episode", tmp.str("ep"), "--relit-first",
                 tmp.str("relit0.pfm"), "--out", out}) == 0);

    CHECK(read_bytes(tmp.str("ep/proprio.csv")) == read_bytes(out + "/proprio.csv"));
    CHECK(read_bytes(tmp.str("ep/actions.csv")) == read_bytes(out + "/actions.csv"));
    CHECK(read_bytes(tmp.str("ep/meta.txt")) == read_bytes(out + "/meta.txt"));

    Episode result = load_episode(out);
    REQUIRE(result.frames.size() == 3);
    double mean_in = 0, mean_out = 0;
    for (size_t k = 0; k < saved.frames[1].size(); ++k) {
        mean_in += saved.frames[1].data()[k];
        mean_out += result.frames[1].data()[k];
    }
    CHECK(mean_out > 1.8 * mean_in);  // the x2 relight carried over to frame 1
}

TEST_CASE("degrade is seed-deterministic and identity at neutral settings") {
    TempDir tmp;
    Episode ep = small_episode(2, 8, 8, 31);
    save_episode(ep, tmp.str("ep"));

    REQUIRE(run({"degrade", "--episode", tmp.str("ep"), "--seed", "11", "--out",
                 tmp.str("d1")}) == 0);
    REQUIRE(run({"degrade", "--episode", tmp.str("ep"), "--seed", "11", "--out",
                 tmp.str("d2")}) == 0);
    for (const char *name : {"frames/000000.png", "frames/000001.png", "proprio.csv",
                             "actions.csv", "meta.txt"})
        CHECK(read_bytes(tmp.str("d1/") + name) == read_bytes(tmp.str("d2/") + name));

    json m = manifest_at(tmp.str("d1"));
    CHECK(m["parameters"]["brightness"].get<double>() >= 0.2);
    CHECK(m["parameters"]["brightness"].get<double>() <= 1.9);

    // Explicit neutral overrides: frames survive the round trip bit-exactly
    // because the transform perturbs each quantized value far below half a
    // quantization step.
    REQUIRE(run({"degrade", "--episode", tmp.str("ep"), "--brightness", "1.0",
                 "--contrast", "1.0", "--saturation", "1.0", "--hue", "0.0", "--out",
                 tmp.str("d3")}) == 0);
    CHECK(read_bytes(tmp.str("ep/frames/000000.png")) ==
          read_bytes(tmp.str("d3/frames/000000.png")));
    CHECK(read_bytes(tmp.str("ep/frames/000001.png")) ==
          read_bytes(tmp.str("d3/frames/000001.png")));
}

TEST_CASE("augment loses only the slots of broken environment maps") {
    TempDir tmp;
    Pcg32 rng(77);
    GBuffer gbuf = random_gbuffer(6, 6, rng, /*lambert_materials=*/true);
    save_gbuffer(gbuf, tmp.str("g"));
    Episode ep = small_episode(2, 6, 6, 41);
    save_episode(ep, tmp.str("ep"));

    random_env(8, 4, rng).save(tmp.str("good0.pfm"));
    write_bytes(tmp.str("bogus.pfm"), "this is not a pfm file");
    random_env(8, 4, rng).save(tmp.str("good2.pfm"));

    std::string envs = tmp.str("good0.pfm") + "," + tmp.str("bogus.pfm") + "," +
                       tmp.str("good2.pfm");
    std::string out = tmp.str("aug");
    REQUIRE(run({"augment", "--episode", tmp.str("ep"), "--gbuffer", tmp.str("g"),
                 "--envs", envs, "--spp", "4", "--mode", "lambert", "--out", out}) == 0);

    CHECK(std::filesystem::exists(out + "/env_000/frames/000000.png"));
    CHECK_FALSE(std::filesystem::exists(out + "/env_001"));
    CHECK(std::filesystem::exists(out + "/env_002/frames/000001.png"));
    CHECK(read_bytes(tmp.str("ep/proprio.csv")) ==
          read_bytes(out + "/env_000/proprio.csv"));

    json m = manifest_at(out);
    CHECK(m["status"] == "ok");
    CHECK(m["outputs"].size() == 2);
    REQUIRE(m["warnings"].size() == 1);
    std::string w = m["warnings"][0].get<std::string>();
    CHECK(w.find("bogus.pfm") != std::string::npos);

    // Every environment failing is a hard error.
    CHECK(run({"augment", "--episode", tmp.str("ep"), "--gbuffer", tmp.str("g"),
               "--envs", tmp.str("bogus.pfm"), "--spp", "4", "--out",
               tmp.str("aug2")}) == 1);
    CHECK(manifest_at(tmp.str("aug2"))["status"] == "validation_error");
}

TEST_CASE("texture matches the library composition of swap and relight") {
    DiskScene scene(6, 6);
    RadianceImage mask(6, 6, 1);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) mask.at(x, y) = x < 3 ? 1.f : 0.f;
    save_png(mask, scene.tmp.str("mask.png"));

    std::string out = scene.tmp.str("tex/out.pfm");
    REQUIRE(run({"texture", "--gbuffer", scene.gbuffer_dir, "--mask",
                 scene.tmp.str("mask.png"), "--albedo", "0.2,0.3,0.4", "--env",
                 scene.env_path, "--spp", "8", "--mode", "lambert", "--seed", "5",
                 "--out", out}) == 0);

    RenderSettings s;
    s.spp = 8;
    s.mode = BrdfMode::Lambert;
    s.seed = 5;
    GBuffer loaded = load_gbuffer(scene.gbuffer_dir);
    RadianceImage expected =
        relight_frame(swap_albedo(loaded, mask, Vec3(0.2, 0.3, 0.4)),
                      EnvironmentMap::load(scene.env_path), s);
    save_image(expected, scene.tmp.str("expected.pfm"));
    CHECK(read_bytes(out) == read_bytes(scene.tmp.str("expected.pfm")));
}

TEST_CASE("mesh subcommand writes a well-formed OBJ") {
    TempDir tmp;
    GBuffer gbuf = flat_gbuffer(4, 4, Vec3(0.5, 0.5, 0.5));
    save_gbuffer(gbuf, tmp.str("g"));

    std::string out = tmp.str("mesh/scene.obj");
    REQUIRE(run({"mesh", "--gbuffer", tmp.str("g"), "--out", out}) == 0);
    std::string obj = read_bytes(out);
    int verts = 0, faces = 0;
    for (size_t pos = 0; pos < obj.size();) {
        if (obj.compare(pos, 2, "v ") == 0) ++verts;
        if (obj.compare(pos, 2, "f ") == 0) ++faces;
        pos = obj.find('\n', pos);
        if (pos == std::string::npos) break;
        ++pos;
    }
    CHECK(verts == 16);
    CHECK(faces == 18);
    CHECK(manifest_at(tmp.str("mesh"))["status"] == "ok");
}

TEST_CASE("estimate-env recovers usable lighting through the file interface") {
    TempDir tmp;
    GBuffer gbuf = flat_gbuffer(8, 8, Vec3(0.6, 0.6, 0.6));
    save_gbuffer(gbuf, tmp.str("g"));

    RenderSettings s;
    s.mode = BrdfMode::Lambert;
    s.sampler = SamplerKind::CosineOnly;
    s.spp = 64;
    EnvironmentMap truth = constant_env(8, 4, Vec3(1.2, 1.0, 0.8));
    save_image(relight_frame(gbuf, truth, s), tmp.str("frame.pfm"));

    std::string out = tmp.str("est/env.pfm");
    REQUIRE(run({"estimate-env", "--gbuffer", tmp.str("g"), "--frame",
                 tmp.str("frame.pfm"), "--res", "8x4", "--mode", "lambert",
                 "--max-iters", "500", "--out", out}) == 0);

    EnvironmentMap est = EnvironmentMap::load(out);
    CHECK_FALSE(est.degenerate());
    CHECK(est.width() == 8);
    CHECK(est.height() == 4);
    CHECK(run({"estimate-env", "--gbuffer", tmp.str("g"), "--frame",
               tmp.str("frame.pfm"), "--res", "banana", "--out", out}) == 1);
}

TEST_CASE("refine holds the fixed maps bit-identical on disk") {
    TempDir tmp;
    Pcg32 rng(91);
    GBuffer gbuf = random_gbuffer(6, 6, rng, /*lambert_materials=*/true);
    save_gbuffer(gbuf, tmp.str("g"));
    random_env(8, 4, rng).save(tmp.str("env.pfm"));
    save_image(random_image(6, 6, 3, rng, 0.1f, 0.7f), tmp.str("frame.pfm"));

    std::string out = tmp.str("refined");
    REQUIRE(run({"refine", "--gbuffer", tmp.str("g"), "--frame", tmp.str("frame.pfm"),
                 "--env", tmp.str("env.pfm"), "--iters", "2", "--spp-inner", "8",
                 "--mode", "lambert", "--out", out}) == 0);

    for (const char *name : {"metallic.pfm", "normal.pfm", "depth.pfm"})
        CHECK(read_bytes(tmp.str("g/") + name) == read_bytes(out + "/" + name));
    GBuffer refined = load_gbuffer(out);
    CHECK(refined.width() == 6);
    CHECK(manifest_at(out)["status"] == "ok");
}

TEST_CASE("background with a keep-everything mask equals plain relighting") {
    TempDir tmp;
    GBuffer gbuf = flat_gbuffer(5, 5, Vec3(0.5, 0.4, 0.3));
    save_gbuffer(gbuf, tmp.str("g"));
    Pcg32 rng(95);
    random_env(8, 4, rng).save(tmp.str("env.pfm"));
    save_png(constant_image(5, 5, 1, 1.f), tmp.str("keep.png"));

    std::string bg = tmp.str("bg/out.pfm");
    std::string plain = tmp.str("plain/out.pfm");
    REQUIRE(run({"background", "--gbuffer", tmp.str("g"), "--mask", tmp.str("keep.png"),
                 "--env", tmp.str("env.pfm"), "--spp", "8", "--seed", "2", "--out",
                 bg}) == 0);
    REQUIRE(run({"relight", "--gbuffer", tmp.str("g"), "--env", tmp.str("env.pfm"),
                 "--spp", "8", "--seed", "2", "--out", plain}) == 0);
    CHECK(read_bytes(bg) == read_bytes(plain));
}
