#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdssar/errors.hpp"
#include "sdssar/image_io.hpp"
#include "sdssar/params_io.hpp"
#include "sdssar/pipeline.hpp"
#include "sdssar/speckle.hpp"
#include "sdssar/stack_io.hpp"
#include "sdssar/textures.hpp"

using namespace sdssar;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "sdssar_test_pipeline" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct CliResult {
    int status = 0;
    json output;
};

/// Runs the CLI and parses its stdout as one JSON document.
CliResult cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "cli_stdout.json";
    const std::string cmd = std::string(SDSSAR_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    const std::string text = slurp(out);
    r.output = json::parse(text, nullptr, false);
    return r;
}

PipelineConfig small_config(const fs::path& out) {
    PipelineConfig c = PipelineConfig::defaults("desk");
    c.out = out;
    c.seed = 7;
    return c;
}

}  // namespace

TEST_CASE("config profiles, overrides and strict keys") {
    const auto desk = PipelineConfig::defaults("desk");
    const auto paper = PipelineConfig::defaults("paper");
    CHECK(desk.train.tile_size == 64);
    CHECK(paper.train.tile_size == 256);
    CHECK(paper.train.epochs == 300);
    CHECK(paper.train.batch_size == 4);
    CHECK(paper.train.k == 2);
    CHECK_THROWS_AS(PipelineConfig::defaults("huge"), InvalidArgument);

    auto c = desk;
    c.apply(json::parse(R"({"seed": 5, "train": {"epochs": 3, "alpha": 2.0}, "regions": [[0, 0, 8, 8]]})"));
    CHECK(c.seed == 5);
    CHECK(c.train.epochs == 3);
    CHECK(c.train.weights.alpha == 2.0);
    REQUIRE(c.regions.size() == 1);
    CHECK(c.regions[0].width == 8);
    CHECK(c.train_config().seed == 5);
    CHECK_THROWS_AS(c.apply(json::parse(R"({"sed": 5})")), InvalidArgument);
    auto odd = c;
    odd.apply(json::parse(R"({"train": {"tile_size": 63}})"));
    CHECK_THROWS_AS(odd.validate(), InvalidArgument);

    const fs::path dir = fresh_dir("config");
    {
        std::ofstream os(dir / "c.toml");
        os << "seed = 11\nlooks = 2\n[train]\nepochs = 4\nlog_form = false\n";
    }
    auto t = desk;
    t.apply(load_config_document(dir / "c.toml"));
    CHECK(t.seed == 11);
    CHECK(t.looks == 2);
    CHECK(t.train.epochs == 4);
    CHECK_FALSE(t.train.log_form);
    {
        std::ofstream os(dir / "bad.toml");
        os << "seed = = 1\n";
    }
    CHECK_THROWS_AS(load_config_document(dir / "bad.toml"), InvalidArgument);
}

TEST_CASE("simulate writes pairs, a manifest, and is reproducible") {
    const fs::path dir = fresh_dir("simulate");
    std::vector<fs::path> inputs;
    for (int i = 0; i < 3; ++i) {
        const fs::path p = dir / ("src" + std::to_string(i) + ".pgm");
        write_pgm(p, make_texture(static_cast<TextureKind>(i), 48, 40, 1 + i), 255);
        inputs.push_back(p);
    }
    auto cfg = small_config(dir / "a");
    cfg.looks = 1;
    const json r = cmd_simulate(cfg, {inputs});
    CHECK(r["count"] == 3);
    const json m = json::parse(slurp(dir / "a" / "manifest.json"));
    REQUIRE(m["entries"].size() == 3);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a" / "clean")) files += e.path().extension() == ".raw";
    for (const auto& e : fs::directory_iterator(dir / "a" / "speckled")) files += e.path().extension() == ".raw";
    CHECK(files == 6);

    for (const auto& e : m["entries"]) {
        const auto clean = read_raw(dir / "a" / e["clean"].get<std::string>());
        const auto noisy = read_raw(dir / "a" / e["speckled"].get<std::string>());
        CHECK(noisy.looks() == 1);
        double sx = 0, sxx = 0, sy = 0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            sx += clean.pixels()[i];
            sxx += clean.pixels()[i] * clean.pixels()[i];
            sy += noisy.pixels()[i];
        }
        // sum(Y)/sum(X) has mean 1 and variance sum(x^2) / (L sum(x)^2).
        const double sigma = std::sqrt(sxx) / sx;
        CHECK(std::abs(sy / sx - 1.0) < 3 * sigma);
    }

    auto cfg2 = cfg;
    cfg2.out = dir / "b";
    cmd_simulate(cfg2, {inputs});
    for (const auto& e : m["entries"]) {
        const std::string rel = e["speckled"].get<std::string>();
        CHECK(slurp(dir / "a" / rel) == slurp(dir / "b" / rel));
    }

    // Unreadable inputs are skipped with a warning; none readable is an error.
    {
        std::ofstream os(dir / "broken.pgm");
        os << "P5\n";
    }
    auto cfg3 = cfg;
    cfg3.out = dir / "c";
    const json r3 = cmd_simulate(cfg3, {{inputs[0], dir / "broken.pgm"}});
    CHECK(r3["count"] == 1);
    CHECK(r3["warnings"].size() == 1);
    CHECK_THROWS_AS(cmd_simulate(cfg3, {{dir / "broken.pgm"}}), IoError);
}

TEST_CASE("sample writes a stack that reads back and reassembles") {
    const fs::path dir = fresh_dir("sample");
    const fs::path img = dir / "y.raw";
    const auto y = make_texture(TextureKind::blocks, 33, 30, 2);
    write_raw(img, y);
    const json r = cmd_sample(small_config(dir), {img, "ra", false});
    CHECK(r["count"] == 4);
    const auto st = read_stack(dir / "stack");
    // The stack is stored as float32.
    const auto back = global_upsample(st);
    const auto want = sampler_crop(y, 2);
    REQUIRE(back.same_shape(want));
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(back.pixels()[i] == static_cast<double>(static_cast<float>(want.pixels()[i])));
}

TEST_CASE("train: log rows, resume and runtime budget") {
    const fs::path dir = fresh_dir("train");
    auto cfg = small_config(dir / "full");
    cfg.train.epochs = 5;
    cfg.train.tiles_per_epoch = 8;
    cfg.checkpoint_every = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const json r = cmd_train(cfg, {});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 600.0);
    const std::size_t steps_per_epoch = 8 / cfg.train.batch_size;
    std::ifstream log(dir / "full" / "loss.jsonl");
    std::size_t rows = 0;
    for (std::string line; std::getline(log, line);) {
        const json row = json::parse(line);
        for (const char* key : {"epoch", "step", "cyc", "reg", "per", "total", "lr"}) CHECK(row.contains(key));
        ++rows;
    }
    CHECK(rows == 5 * steps_per_epoch);
    CHECK(r["steps"] == rows);

    auto part = cfg;
    part.out = dir / "part";
    part.train.epochs = 2;
    cmd_train(part, {});
    part.train.epochs = 5;
    cmd_train(part, {true});
    CHECK(slurp(dir / "part" / "params.sdsp") == slurp(dir / "full" / "params.sdsp"));
    CHECK(slurp(dir / "part" / "loss.jsonl") == slurp(dir / "full" / "loss.jsonl"));

    auto none = cfg;
    none.out = dir / "none";
    CHECK_THROWS_AS(cmd_train(none, {true}), IoError);
}

TEST_CASE("despeckle preserves format; identity params give an identical file") {
    const fs::path dir = fresh_dir("despeckle");
    const auto params = DespecklerParams::initialize(NetworkSpec::reference(), 1);
    write_params(dir / "id.sdsp", params);
    const auto y = apply_speckle(make_texture(TextureKind::blocks, 40, 24, 3), 1, 5);
    std::vector<double> px(y.pixels().begin(), y.pixels().end());
    for (double& v : px) v = std::min(std::round(v * 200.0), 65535.0);
    const IntensityImage y16(40, 24, px);
    write_pgm(dir / "in16.pgm", y16, 65535);
    const auto cfg = small_config(dir);
    const json r = cmd_despeckle(cfg, {dir / "id.sdsp", dir / "in16.pgm", dir / "out16.pgm"});
    CHECK(r["format"] == "pgm16");
    CHECK(slurp(dir / "in16.pgm") == slurp(dir / "out16.pgm"));

    write_raw(dir / "in.raw", y);
    cmd_despeckle(cfg, {dir / "id.sdsp", dir / "in.raw", {}});
    CHECK(slurp(dir / "in.raw") == slurp(dir / "despeckled.raw"));

    std::string bytes = slurp(dir / "id.sdsp");
    bytes[4] = 42;
    {
        std::ofstream os(dir / "v.sdsp", std::ios::binary);
        os << bytes;
    }
    CHECK_THROWS_AS(cmd_despeckle(cfg, {dir / "v.sdsp", dir / "in.raw", {}}), VersionMismatch);
}

TEST_CASE("evaluate: identities, fields, CSV, and CLI equality") {
    const fs::path dir = fresh_dir("evaluate");
    const auto clean = make_texture(TextureKind::blocks, 48, 48, 4);
    const auto y = apply_speckle(clean, 4, 2);
    write_raw(dir / "y.raw", y);
    write_raw(dir / "x.raw", clean);
    auto cfg = small_config(dir / "same");
    cfg.regions = {Region{0, 0, 8, 8}};
    const json same = cmd_evaluate(cfg, {dir / "y.raw", dir / "y.raw", std::nullopt, false});
    CHECK(same["tcr"].get<double>() == 0.0);
    CHECK(same["mor"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(same["epd_roa"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(same["psnr"].is_null());
    for (const char* key : {"enl", "enl_per_region", "enl_original", "tcr", "mor", "epd_roa_h", "epd_roa_v", "epd_roa",
                            "psnr", "ssim", "errors"})
        CHECK(same.contains(key));

    cfg.out = dir / "lib";
    const json lib = cmd_evaluate(cfg, {dir / "y.raw", dir / "x.raw", dir / "x.raw", true});
    const auto y32 = read_raw(dir / "y.raw"), x32 = read_raw(dir / "x.raw");
    EvaluationInputs in;
    in.original = &y32;
    in.despeckled = &x32;
    in.clean = &x32;
    in.homogeneous = cfg.regions;
    const auto direct = evaluate(in);
    CHECK(lib["mor"].get<double>() == *direct.mor);
    CHECK(lib["ssim"].get<double>() == *direct.ssim);
    CHECK(lib["psnr"] == "inf");
    CHECK(fs::exists(dir / "lib" / "metrics.csv"));

    const auto c = cli("--out " + (dir / "cli").string() + " evaluate " + (dir / "y.raw").string() + " " +
                           (dir / "x.raw").string() + " --clean " + (dir / "x.raw").string() + " --region 0 0 8 8",
                       dir);
    CHECK(c.status == 0);
    CHECK(c.output == lib);
    CHECK(json::parse(slurp(dir / "cli" / "metrics.json")) == lib);
}

TEST_CASE("diagnose: ramp difference means") {
    const fs::path dir = fresh_dir("diagnose_ramp");
    write_raw(dir / "ramp.raw", make_texture(TextureKind::ramp, 64, 64, 1));
    auto cfg = small_config(dir);
    cfg.diagnose_seeds = 2;
    cfg.permutations = 100;
    cfg.pc_samples = 32;
    const json r = cmd_diagnose(cfg, {dir / "ramp.raw"});
    const double ra = std::abs(r["ra_sample"]["difference_mean"].get<double>());
    const double ord = std::abs(r["ordered"]["difference_mean"].get<double>());
    CHECK(ord >= 10 * ra);
    CHECK(fs::exists(r["ra_sample"]["difference_image"].get<std::string>()));
    CHECK(fs::exists(dir / "diagnose" / "diagnostics.json"));
    CHECK(r["ra_sample"]["p_values"].size() == 2);
}

TEST_CASE("diagnose: decorrelated random pairs look more independent than ordered ones") {
    // Speckle averaged with its right neighbour: the ordered sampler always
    // pairs horizontal neighbours, RA-SAMPLE only some of the time.
    const fs::path dir = fresh_dir("diagnose_corr");
    const std::size_t w = 64;
    const auto base = apply_speckle(IntensityImage::constant(w + 1, w, 1.0), 1, 3);
    Raster corr(w, w);
    for (std::size_t r = 0; r < w; ++r)
        for (std::size_t c = 0; c < w; ++c) corr.at(r, c) = 0.5 * (base.at(r, c) + base.at(r, c + 1));
    write_raw(dir / "corr.raw", IntensityImage(corr));
    auto cfg = small_config(dir);
    cfg.diagnose_seeds = 20;
    cfg.permutations = 200;
    cfg.pc_samples = 64;
    const json r = cmd_diagnose(cfg, {dir / "corr.raw"});
    const double p_ra = r["ra_sample"]["median_p_value"].get<double>();
    const double p_ord = r["ordered"]["median_p_value"].get<double>();
    MESSAGE("median p: ra ", p_ra, " ordered ", p_ord);
    CHECK(p_ra > p_ord);
}

TEST_CASE("pc-test and convergence probe") {
    const fs::path dir = fresh_dir("pc");
    write_raw(dir / "y.raw", apply_speckle(IntensityImage::constant(32, 32, 1.0), 1, 4));
    auto cfg = small_config(dir);
    cfg.permutations = 100;
    cfg.pc_samples = 48;
    const json r = cmd_pc_test(cfg, {dir / "y.raw", std::nullopt});
    CHECK(r["n"] == 48);
    CHECK(r["p_value"].get<double>() > 0.0);
    CHECK(r["p_value"].get<double>() <= 1.0);
    const json self = cmd_pc_test(cfg, {dir / "y.raw", dir / "y.raw"});
    CHECK(self["reject"] == true);

    const json probe = cmd_convergence_probe(cfg, {1, {16, 64, 256}, 400});
    CHECK(probe["slope"].get<double>() == doctest::Approx(-1.0).epsilon(0.15));
    const json flat = cmd_convergence_probe(cfg, {0, {16, 64}, 10});
    CHECK(flat["slope"].is_null());
    for (const auto& p : flat["points"]) CHECK(p["mean_sq_diff"].get<double>() == 0.0);
}

TEST_CASE("CLI: errors are JSON with a nonzero exit; runs are byte-reproducible") {
    const fs::path dir = fresh_dir("cli");
    const auto missing = cli("despeckle " + (dir / "nope.sdsp").string() + " " + (dir / "nope.raw").string(), dir);
    CHECK(missing.status != 0);
    CHECK(missing.output.contains("error"));
    CHECK(missing.output["error"] == "io");

    const auto usage = cli("frobnicate", dir);
    CHECK(usage.status == 2);
    CHECK(usage.output["error"] == "usage");

    {
        std::ofstream os(dir / "bad.json");
        os << R"({"train": {"epochs": 0}})";
    }
    const auto bad = cli("--config " + (dir / "bad.json").string() + " train", dir);
    CHECK(bad.status == 1);
    CHECK(bad.output["error"] == "invalid-argument");

    {
        std::ofstream os(dir / "tiny.toml");
        os << "seed = 3\n[synthetic]\ncount = 2\nsize = 32\n[train]\nepochs = 2\ntile_size = 32\ntiles_per_epoch = 2\n"
              "batch_size = 2\n";
    }
    for (const char* run : {"r1", "r2"}) {
        const std::string base = "--config " + (dir / "tiny.toml").string() + " --out " + (dir / run).string();
        const auto t = cli(base + " train", dir);
        CHECK(t.status == 0);
        CHECK(t.output["steps"] == 2);
        const auto s = cli(base + " simulate --looks 2", dir);
        CHECK(s.status == 0);
        const auto d = cli(base + " despeckle " + (dir / run / "params.sdsp").string() + " " +
                               (dir / run / "speckled" / "synthetic_000.raw").string(),
                           dir);
        CHECK(d.status == 0);
    }
    CHECK(slurp(dir / "r1" / "params.sdsp") == slurp(dir / "r2" / "params.sdsp"));
    CHECK(slurp(dir / "r1" / "loss.jsonl") == slurp(dir / "r2" / "loss.jsonl"));
    CHECK(slurp(dir / "r1" / "despeckled.raw") == slurp(dir / "r2" / "despeckled.raw"));
    CHECK(slurp(dir / "r1" / "manifest.json") == slurp(dir / "r2" / "manifest.json"));
}
