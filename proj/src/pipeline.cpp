#include "sdssar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "toml.hpp"
#include "sdssar/errors.hpp"
#include "sdssar/image_io.hpp"
#include "sdssar/params_io.hpp"
#include "sdssar/pcorr.hpp"
#include "sdssar/probe.hpp"
#include "sdssar/rng.hpp"
#include "sdssar/speckle.hpp"
#include "sdssar/stack_io.hpp"
#include "sdssar/textures.hpp"

namespace sdssar {

using nlohmann::json;

namespace {

// ---- config helpers -------------------------------------------------------

template <class T>
void take(const json& obj, const char* key, T& dst) {
    if (auto it = obj.find(key); it != obj.end()) {
        try {
            dst = it->get<T>();
        } catch (const json::exception&) {
            throw InvalidArgument(std::string("config: bad value for '") + key + "'");
        }
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    if (!obj.is_object()) throw InvalidArgument("config: '" + where + "' must be a table");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw InvalidArgument("config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
        }
    }
}

Region region_from_json(const json& j) {
    try {
        if (j.is_array()) {
            const auto v = j.get<std::vector<std::size_t>>();
            if (v.size() != 4) throw InvalidArgument("config: region needs [row, col, height, width]");
            return {v[0], v[1], v[2], v[3]};
        }
        return {j.at("row").get<std::size_t>(), j.at("col").get<std::size_t>(),
                j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>()};
    } catch (const json::exception&) {
        throw InvalidArgument("config: malformed region");
    }
}

json region_to_json(const Region& r) {
    return {{"row", r.row}, {"col", r.col}, {"height", r.height}, {"width", r.width}};
}

StopGradientBranch branch_from_string(const std::string& s) {
    if (s == "full_image") return StopGradientBranch::full_image;
    if (s == "mapped_stack") return StopGradientBranch::mapped_stack;
    throw InvalidArgument("config: stop_branch must be full_image or mapped_stack");
}

const char* to_string(StopGradientBranch b) {
    return b == StopGradientBranch::full_image ? "full_image" : "mapped_stack";
}

// ---- output helpers -------------------------------------------------------

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

json number_or_null(const std::optional<double>& v) {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
}

std::string csv_cell(const std::optional<double>& v) {
    if (!v) return "";
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

std::vector<fs::path> images_in(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_image_path(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void warn(std::vector<std::string>* sink, const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
    if (sink) sink->push_back(msg);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json pc_json(const PCStatistic& s) {
    return {{"pc", s.pc}, {"pcov_sq", s.pcov_sq}, {"cvar_x_sq", s.cvar_x_sq}, {"cvar_y_sq", s.cvar_y_sq}};
}

}  // namespace

// ---- PipelineConfig -------------------------------------------------------

PipelineConfig PipelineConfig::defaults(const std::string& profile) {
    PipelineConfig c;
    c.profile = profile;
    if (profile == "desk") {
        c.synthetic_count = 8;
        c.synthetic_size = 64;
        c.train.tile_size = 64;
        c.train.epochs = 30;
        c.train.batch_size = 4;
        c.train.tiles_per_epoch = 16;
        c.train.log_form = true;
    } else if (profile == "paper") {
        c.synthetic_count = 64;
        c.synthetic_size = 256;
        c.train.tile_size = 256;
        c.train.epochs = 300;
        c.train.batch_size = 4;
        c.train.tiles_per_epoch = 256;
        c.train.log_form = false;
        c.pc_samples = 256;
    } else {
        throw InvalidArgument("unknown profile '" + profile + "' (desk|paper)");
    }
    return c;
}

void PipelineConfig::apply(const json& doc) {
    reject_unknown(doc, {"profile", "seed", "out", "dataset", "looks", "synthetic", "train", "decorrelator",
                         "regions", "target", "pc", "probe"},
                   "");
    if (auto it = doc.find("profile"); it != doc.end() && it->get<std::string>() != profile) {
        throw InvalidArgument("config profile '" + it->get<std::string>() + "' conflicts with --profile " + profile);
    }
    take(doc, "seed", seed);
    std::string s;
    if (doc.contains("out")) { take(doc, "out", s); out = s; }
    if (doc.contains("dataset")) { take(doc, "dataset", s); dataset = s; }
    take(doc, "looks", looks);
    if (auto it = doc.find("synthetic"); it != doc.end()) {
        reject_unknown(*it, {"count", "size"}, "synthetic");
        take(*it, "count", synthetic_count);
        take(*it, "size", synthetic_size);
    }
    if (auto it = doc.find("train"); it != doc.end()) {
        const json& t = *it;
        reject_unknown(t, {"learning_rate", "decay_every", "decay_factor", "batch_size", "epochs", "tile_size",
                           "tiles_per_epoch", "k", "log_form", "decorrelate_training", "stop_branch", "alpha",
                           "beta", "feature_seed", "checkpoint_every"},
                       "train");
        take(t, "learning_rate", train.learning_rate);
        take(t, "decay_every", train.decay_every);
        take(t, "decay_factor", train.decay_factor);
        take(t, "batch_size", train.batch_size);
        take(t, "epochs", train.epochs);
        take(t, "tile_size", train.tile_size);
        take(t, "tiles_per_epoch", train.tiles_per_epoch);
        take(t, "k", train.k);
        take(t, "log_form", train.log_form);
        take(t, "decorrelate_training", train.decorrelate_training);
        if (t.contains("stop_branch")) { take(t, "stop_branch", s); train.stop_branch = branch_from_string(s); }
        take(t, "alpha", train.weights.alpha);
        take(t, "beta", train.weights.beta);
        take(t, "feature_seed", train.feature_seed);
        take(t, "checkpoint_every", checkpoint_every);
    }
    if (auto it = doc.find("decorrelator"); it != doc.end()) {
        reject_unknown(*it, {"cutoff", "gain", "offset", "order"}, "decorrelator");
        take(*it, "cutoff", train.decorrelator.cutoff);
        take(*it, "gain", train.decorrelator.gain);
        take(*it, "offset", train.decorrelator.offset);
        take(*it, "order", train.decorrelator.order);
    }
    if (auto it = doc.find("regions"); it != doc.end()) {
        if (!it->is_array()) throw InvalidArgument("config: regions must be a list");
        regions.clear();
        for (const auto& r : *it) regions.push_back(region_from_json(r));
    }
    if (auto it = doc.find("target"); it != doc.end()) target = region_from_json(*it);
    if (auto it = doc.find("pc"); it != doc.end()) {
        reject_unknown(*it, {"samples", "permutations", "alpha", "patch", "seeds"}, "pc");
        take(*it, "samples", pc_samples);
        take(*it, "permutations", permutations);
        take(*it, "alpha", alpha);
        take(*it, "patch", patch);
        take(*it, "seeds", diagnose_seeds);
    }
    if (auto it = doc.find("probe"); it != doc.end()) {
        reject_unknown(*it, {"sizes", "trials"}, "probe");
        take(*it, "sizes", probe_sizes);
        take(*it, "trials", probe_trials);
    }
}

void PipelineConfig::validate() const {
    if (looks < 1) throw InvalidArgument("looks must be >= 1");
    if (synthetic_count == 0 || synthetic_size < 16) throw InvalidArgument("synthetic corpus too small");
    if (checkpoint_every == 0) throw InvalidArgument("checkpoint_every must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("pc alpha must lie in (0, 1)");
    if (diagnose_seeds == 0) throw InvalidArgument("pc seeds must be positive");
    if (!dataset.empty() && !fs::is_directory(dataset)) {
        throw IoError("dataset directory not found: " + dataset.string());
    }
    train_config().validate();
}

TrainConfig PipelineConfig::train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
}

json PipelineConfig::to_json() const {
    json regs = json::array();
    for (const auto& r : regions) regs.push_back(region_to_json(r));
    return {{"profile", profile},
            {"seed", seed},
            {"out", out.string()},
            {"dataset", dataset.string()},
            {"looks", looks},
            {"synthetic", {{"count", synthetic_count}, {"size", synthetic_size}}},
            {"train",
             {{"learning_rate", train.learning_rate},
              {"decay_every", train.decay_every},
              {"decay_factor", train.decay_factor},
              {"batch_size", train.batch_size},
              {"epochs", train.epochs},
              {"tile_size", train.tile_size},
              {"tiles_per_epoch", train.tiles_per_epoch},
              {"k", train.k},
              {"log_form", train.log_form},
              {"decorrelate_training", train.decorrelate_training},
              {"stop_branch", to_string(train.stop_branch)},
              {"alpha", train.weights.alpha},
              {"beta", train.weights.beta},
              {"feature_seed", train.feature_seed},
              {"checkpoint_every", checkpoint_every}}},
            {"decorrelator",
             {{"cutoff", train.decorrelator.cutoff},
              {"gain", train.decorrelator.gain},
              {"offset", train.decorrelator.offset},
              {"order", train.decorrelator.order}}},
            {"regions", regs},
            {"target", target ? region_to_json(*target) : json(nullptr)},
            {"pc",
             {{"samples", pc_samples},
              {"permutations", permutations},
              {"alpha", alpha},
              {"patch", patch},
              {"seeds", diagnose_seeds}}},
            {"probe", {{"sizes", probe_sizes}, {"trials", probe_trials}}}};
}

json load_config_document(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config " + path.string());
    const auto ext = path.extension().string();
    if (ext == ".toml") {
        try {
            const toml::table tbl = toml::parse(is, path.string());
            std::ostringstream ss;
            ss << toml::json_formatter{tbl};
            return json::parse(ss.str());
        } catch (const toml::parse_error& e) {
            throw InvalidArgument("config " + path.string() + ": " + std::string(e.description()));
        }
    }
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw InvalidArgument("config " + path.string() + ": " + e.what());
    }
}

// ---- commands -------------------------------------------------------------

json cmd_simulate(const PipelineConfig& cfg, const SimulateArgs& args) {
    cfg.validate();
    struct Source {
        std::string name;
        IntensityImage image;
    };
    std::vector<Source> sources;
    std::vector<std::string> warnings;
    std::vector<fs::path> files = args.inputs;
    if (files.empty() && !cfg.dataset.empty()) files = images_in(cfg.dataset);
    if (files.empty() && args.inputs.empty() && cfg.dataset.empty()) {
        const auto corpus = make_corpus(cfg.synthetic_count, cfg.synthetic_size, cfg.seed);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "synthetic_%03zu", i);
            sources.push_back({name, corpus[i]});
        }
    }
    for (const auto& f : files) {
        try {
            sources.push_back({f.stem().string(), read_image(f).image});
        } catch (const Error& e) {
            warn(&warnings, "skipping " + f.string() + ": " + e.what());
        }
    }
    if (sources.empty()) throw IoError("simulate: no readable input images");

    json entries = json::array();
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto& src = sources[i];
        const std::uint64_t s = derive_seed(cfg.seed, {i, 0x51a1});
        const IntensityImage speckled = apply_speckle(src.image, cfg.looks, s);
        const fs::path clean_path = cfg.out / "clean" / (src.name + ".raw");
        const fs::path noisy_path = cfg.out / "speckled" / (src.name + ".raw");
        fs::create_directories(clean_path.parent_path());
        fs::create_directories(noisy_path.parent_path());
        write_raw(clean_path, src.image);
        write_raw(noisy_path, speckled);
        entries.push_back({{"name", src.name},
                           {"clean", fs::relative(clean_path, cfg.out).string()},
                           {"speckled", fs::relative(noisy_path, cfg.out).string()},
                           {"width", src.image.width()},
                           {"height", src.image.height()},
                           {"looks", cfg.looks},
                           {"seed", s}});
    }
    const json manifest{{"looks", cfg.looks}, {"seed", cfg.seed}, {"entries", entries}};
    write_json(cfg.out / "manifest.json", manifest);
    return {{"command", "simulate"},
            {"count", entries.size()},
            {"manifest", (cfg.out / "manifest.json").string()},
            {"warnings", warnings}};
}

json cmd_sample(const PipelineConfig& cfg, const SampleArgs& args) {
    cfg.validate();
    const LoadedImage in = read_image(args.image);
    const std::size_t k = cfg.train.k;
    SubImageStack stack;
    if (args.sampler == "ra") {
        stack = ra_sample(in.image, k, cfg.seed);
    } else if (args.sampler == "ordered") {
        stack = ordered_sample(in.image, k);
    } else {
        throw InvalidArgument("sampler must be ra or ordered");
    }
    if (args.decorrelate) stack.subimages[0] = decorrelate(stack.subimages[0], cfg.train.decorrelator);
    const fs::path dir = cfg.out / "stack";
    write_stack(dir, stack);
    return {{"command", "sample"},
            {"sampler", args.sampler},
            {"k", k},
            {"count", stack.count()},
            {"sub_width", stack.sub_width()},
            {"sub_height", stack.sub_height()},
            {"decorrelated", args.decorrelate},
            {"dir", dir.string()}};
}

std::vector<IntensityImage> load_training_set(const PipelineConfig& cfg, std::vector<std::string>* warnings) {
    std::vector<IntensityImage> out;
    if (cfg.dataset.empty()) {
        const auto clean = make_corpus(cfg.synthetic_count, cfg.synthetic_size, cfg.seed);
        for (std::size_t i = 0; i < clean.size(); ++i) {
            out.push_back(apply_speckle(clean[i], cfg.looks, derive_seed(cfg.seed, {i, 0x51a1})));
        }
        return out;
    }
    const fs::path manifest = cfg.dataset / "manifest.json";
    if (fs::exists(manifest)) {
        std::ifstream is(manifest);
        json m;
        try {
            m = json::parse(is);
            for (const auto& e : m.at("entries")) {
                const fs::path p = cfg.dataset / e.at("speckled").get<std::string>();
                try {
                    out.push_back(read_image(p).image);
                } catch (const Error& ex) {
                    warn(warnings, "skipping " + p.string() + ": " + ex.what());
                }
            }
        } catch (const json::exception& e) {
            throw IoError("dataset manifest: " + std::string(e.what()));
        }
    } else {
        for (const auto& f : images_in(cfg.dataset)) {
            try {
                out.push_back(read_image(f).image);
            } catch (const Error& ex) {
                warn(warnings, "skipping " + f.string() + ": " + ex.what());
            }
        }
    }
    if (out.empty()) throw IoError("training set is empty: " + cfg.dataset.string());
    return out;
}

json cmd_train(const PipelineConfig& cfg, const TrainArgs& args) {
    cfg.validate();
    std::vector<std::string> warnings;
    const auto dataset = load_training_set(cfg, &warnings);
    const TrainConfig tc = cfg.train_config();
    fs::create_directories(cfg.out);
    const fs::path ckpt = cfg.out / "checkpoint.sdsc";
    const fs::path params_path = cfg.out / "params.sdsp";
    const fs::path log_path = cfg.out / "loss.jsonl";

    std::optional<TrainState> resume;
    if (args.resume) {
        if (!fs::exists(ckpt)) throw IoError("no checkpoint to resume from in " + cfg.out.string());
        resume = read_checkpoint(ckpt);
    }
    const std::size_t start_epoch = resume ? resume->next_epoch : 0;

    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw IoError("cannot write " + log_path.string());
    auto log_row = [&](const StepRecord& r) {
        const json row{{"epoch", r.epoch}, {"step", r.step},   {"cyc", r.loss.cyc}, {"reg", r.loss.reg},
                       {"per", r.loss.per}, {"total", r.loss.total}, {"lr", r.learning_rate}};
        log << row.dump() << '\n';
    };
    if (resume) {
        for (const auto& r : resume->history) log_row(r);
    }
    TrainHooks hooks;
    hooks.on_step = [&](const StepRecord& r) {
        log_row(r);
        log.flush();
    };
    hooks.on_epoch_end = [&](const TrainState& s) {
        if (s.next_epoch % cfg.checkpoint_every == 0) write_checkpoint(ckpt, s);
    };
    const TrainState state = train(tc, dataset, std::move(resume), hooks);
    write_checkpoint(ckpt, state);
    write_params(params_path, state.params);

    json last = nullptr;
    if (!state.history.empty()) {
        const auto& l = state.history.back().loss;
        last = {{"cyc", l.cyc}, {"reg", l.reg}, {"per", l.per}, {"total", l.total}};
    }
    return {{"command", "train"},
            {"epochs", state.next_epoch},
            {"start_epoch", start_epoch},
            {"steps", state.history.size()},
            {"images", dataset.size()},
            {"scale", state.params.spec.scale},
            {"domain", to_string(state.params.spec.domain)},
            {"final_loss", last},
            {"params", params_path.string()},
            {"checkpoint", ckpt.string()},
            {"loss_log", log_path.string()},
            {"warnings", warnings}};
}

json cmd_despeckle(const PipelineConfig& cfg, const DespeckleArgs& args) {
    const DespecklerParams params = read_params(args.params);
    const LoadedImage in = read_image(args.input);
    const IntensityImage out = despeckle(params, in.image);
    fs::path dst = args.output;
    if (dst.empty()) {
        const auto ext = args.input.extension().string();
        dst = cfg.out / ("despeckled" + (ext.empty() ? std::string(".raw") : ext));
    }
    if (!dst.parent_path().empty()) fs::create_directories(dst.parent_path());
    write_image(dst, out, in.format, in.maxval ? in.maxval : 255);
    const char* fmt = in.format == FileFormat::pgm8 ? "pgm8" : in.format == FileFormat::pgm16 ? "pgm16" : "raw_float";
    return {{"command", "despeckle"},
            {"input", args.input.string()},
            {"output", dst.string()},
            {"format", fmt},
            {"width", out.width()},
            {"height", out.height()}};
}

json metrics_to_json(const MetricsReport& r) {
    json errors = json::object();
    for (const auto& [k, v] : r.errors) errors[k] = v;
    return {{"enl", number_or_null(r.enl)},
            {"enl_per_region", r.enl_per_region},
            {"enl_original", number_or_null(r.enl_original)},
            {"tcr", number_or_null(r.tcr)},
            {"mor", number_or_null(r.mor)},
            {"epd_roa_h", number_or_null(r.epd_roa_h)},
            {"epd_roa_v", number_or_null(r.epd_roa_v)},
            {"epd_roa", number_or_null(r.epd_roa)},
            {"psnr", number_or_null(r.psnr)},
            {"ssim", number_or_null(r.ssim)},
            {"errors", errors}};
}

json cmd_evaluate(const PipelineConfig& cfg, const EvaluateArgs& args) {
    const IntensityImage original = read_image(args.original).image;
    const IntensityImage despeckled = read_image(args.despeckled).image;
    std::optional<IntensityImage> clean;
    if (args.clean) clean = read_image(*args.clean).image;
    EvaluationInputs in;
    in.original = &original;
    in.despeckled = &despeckled;
    in.clean = clean ? &*clean : nullptr;
    in.homogeneous = cfg.regions;
    in.target = cfg.target;
    const MetricsReport rep = evaluate(in);
    json j = metrics_to_json(rep);
    fs::create_directories(cfg.out);
    write_json(cfg.out / "metrics.json", j);
    if (args.csv) {
        std::ofstream os(cfg.out / "metrics.csv");
        if (!os) throw IoError("cannot write metrics.csv");
        os << "image,ENL,TCR,MoR,EPD-ROA,EPD-ROA-H,EPD-ROA-V,PSNR,SSIM\n";
        os << args.despeckled.filename().string() << ',' << csv_cell(rep.enl) << ',' << csv_cell(rep.tcr) << ','
           << csv_cell(rep.mor) << ',' << csv_cell(rep.epd_roa) << ',' << csv_cell(rep.epd_roa_h) << ','
           << csv_cell(rep.epd_roa_v) << ',' << csv_cell(rep.psnr) << ',' << csv_cell(rep.ssim) << '\n';
    }
    return j;
}

json cmd_diagnose(const PipelineConfig& cfg, const DiagnoseArgs& args) {
    cfg.validate();
    const IntensityImage image = read_image(args.image).image;
    const std::size_t k = cfg.train.k;
    const fs::path dir = cfg.out / "diagnose";
    fs::create_directories(dir);
    json report{{"command", "diagnose"}, {"k", k}, {"seed", cfg.seed}};

    for (const std::string sampler : {"ra_sample", "ordered"}) {
        const bool ra = sampler == "ra_sample";
        auto make_stack = [&](std::uint64_t s) { return ra ? ra_sample(image, k, s) : ordered_sample(image, k); };
        const SubImageStack stack = make_stack(cfg.seed);
        const Raster a = stack.subimages[0].raster();
        const Raster b = stack.subimages[1].raster();
        Raster diff(a.width, a.height);
        for (std::size_t p = 0; p < diff.size(); ++p) diff.values[p] = a.values[p] - b.values[p];
        const double dm = mean(diff.values);
        const double scale = mean(sampler_crop(image, k).pixels());
        const fs::path diff_path = dir / ("difference_" + sampler + ".raw");
        write_raster_raw(diff_path, diff);

        json entry{{"difference_mean", dm},
                   {"difference_mean_normalized", scale > 0.0 ? json(dm / scale) : json(nullptr)},
                   {"difference_image", diff_path.string()},
                   {"decorrelated", ra}};
        try {
            std::vector<double> ps;
            json first;
            for (std::size_t s = 0; s < cfg.diagnose_seeds; ++s) {
                const std::uint64_t ss = derive_seed(cfg.seed, {s, 0xd1a9});
                const SubImageStack st = make_stack(derive_seed(ss, {0}));
                const std::optional<DecorrelatorSpec> dec =
                    ra ? std::optional<DecorrelatorSpec>(cfg.train.decorrelator) : std::nullopt;
                const std::size_t n = std::min({cfg.pc_samples, st.sub_size(), kMaxProjectionSample});
                const PCSample smp = stack_pair_sample(st, 0, 1, dec, n, derive_seed(ss, {1}), cfg.patch);
                const IndependenceResult r = independence_test(smp, cfg.alpha, cfg.permutations, derive_seed(ss, {2}));
                ps.push_back(r.p_value);
                if (s == 0) {
                    first = pc_json(r.statistic);
                    first["p_value"] = r.p_value;
                    first["n"] = smp.size();
                    first["d"] = smp.dim;
                }
            }
            entry["pc"] = first;
            entry["p_values"] = ps;
            entry["median_p_value"] = median(ps);
        } catch (const DegenerateInput& e) {
            entry["pc_error"] = e.what();
        }
        report[sampler] = entry;
    }
    write_json(dir / "diagnostics.json", report);
    return report;
}

json cmd_pc_test(const PipelineConfig& cfg, const PcTestArgs& args) {
    cfg.validate();
    const IntensityImage x = read_image(args.x_image).image;
    PCSample sample;
    if (args.y_image) {
        const IntensityImage y = read_image(*args.y_image).image;
        const std::size_t n = std::min({cfg.pc_samples, x.size(), kMaxProjectionSample});
        sample = aligned_pair_sample(x.raster(), y.raster(), n, derive_seed(cfg.seed, {1}), cfg.patch);
    } else {
        const SubImageStack st = ra_sample(x, cfg.train.k, derive_seed(cfg.seed, {0}));
        const std::size_t n = std::min({cfg.pc_samples, st.sub_size(), kMaxProjectionSample});
        sample = stack_pair_sample(st, 0, 1, cfg.train.decorrelator, n, derive_seed(cfg.seed, {1}), cfg.patch);
    }
    const IndependenceResult r = independence_test(sample, cfg.alpha, cfg.permutations, derive_seed(cfg.seed, {2}));
    return {{"pc", r.statistic.pc},
            {"pcov_sq", r.statistic.pcov_sq},
            {"p_value", r.p_value},
            {"n", sample.size()},
            {"d", sample.dim},
            {"reject", r.reject},
            {"alpha", cfg.alpha},
            {"permutations", r.permutations}};
}

json cmd_convergence_probe(const PipelineConfig& cfg, const ProbeArgs& args) {
    if (args.looks < 0) throw InvalidArgument("looks must be >= 0 (0: noise-free)");
    const auto sizes = args.sizes.empty() ? cfg.probe_sizes : args.sizes;
    const std::size_t trials = args.trials ? args.trials : cfg.probe_trials;
    const std::optional<int> looks = args.looks ? std::optional<int>(args.looks) : std::nullopt;
    const ConvergenceReport rep = convergence_probe(looks, sizes, trials, cfg.seed);
    json pts = json::array();
    for (const auto& p : rep.points) {
        pts.push_back({{"pairs", p.pairs}, {"mean_sq_diff", p.mean_sq_diff}, {"std_error", p.std_error}});
    }
    const bool fitted = std::all_of(rep.points.begin(), rep.points.end(),
                                    [](const ConvergencePoint& p) { return p.mean_sq_diff > 0.0; });
    return {{"command", "convergence-probe"},
            {"looks", args.looks},
            {"trials", trials},
            {"points", pts},
            {"slope", fitted ? json(rep.slope) : json(nullptr)},
            {"intercept", fitted ? json(rep.intercept) : json(nullptr)},
            {"slope_ci", fitted ? json::array({rep.slope_ci_low, rep.slope_ci_high}) : json(nullptr)}};
}

}  // namespace sdssar
