// sdssar: command-line front end for the despeckling toolkit.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdssar/errors.hpp"
#include "sdssar/pipeline.hpp"

namespace {

using nlohmann::json;

int fail(const std::string& kind, const std::string& message, const json& extra = json::object()) {
    json err{{"error", kind}, {"message", message}};
    err.update(extra);
    std::cout << err.dump() << std::endl;
    return kind == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised SAR despeckling toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string profile = "desk";
    std::string out_dir;
    app.add_option("--config", config_path, "TOML or JSON config file");
    app.add_option("--seed", seed, "Base random seed");
    app.add_option("--profile", profile, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--out", out_dir, "Output directory");

    sdssar::SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate clean/speckled pairs");
    std::vector<std::string> sim_inputs;
    c_sim->add_option("inputs", sim_inputs, "Clean source images (default: dataset dir or procedural corpus)");
    std::optional<int> sim_looks;
    c_sim->add_option("--looks", sim_looks, "Number of looks L");

    sdssar::SampleArgs smp;
    std::string smp_image;
    std::optional<std::size_t> smp_k;
    auto* c_smp = app.add_subcommand("sample", "Split an image into a sub-image stack");
    c_smp->add_option("image", smp_image)->required();
    c_smp->add_option("--sampler", smp.sampler)->check(CLI::IsMember({"ra", "ordered"}));
    c_smp->add_option("--k", smp_k, "Patch side");
    c_smp->add_flag("--decorrelate", smp.decorrelate, "Filter sub-image 1");

    sdssar::TrainArgs trn;
    auto* c_trn = app.add_subcommand("train", "Train the despeckling network");
    c_trn->add_flag("--resume", trn.resume, "Continue from <out>/checkpoint.sdsc");
    std::optional<std::size_t> trn_epochs;
    c_trn->add_option("--epochs", trn_epochs);
    std::string trn_dataset;
    c_trn->add_option("--dataset", trn_dataset, "Directory of speckled images or a simulate output");

    sdssar::DespeckleArgs dsp;
    std::string dsp_params, dsp_in, dsp_out;
    auto* c_dsp = app.add_subcommand("despeckle", "Apply trained parameters to an image");
    c_dsp->add_option("params", dsp_params)->required();
    c_dsp->add_option("input", dsp_in)->required();
    c_dsp->add_option("output", dsp_out);

    sdssar::EvaluateArgs evl;
    std::string evl_orig, evl_desp, evl_clean;
    std::vector<std::size_t> evl_region;
    auto* c_evl = app.add_subcommand("evaluate", "Quality metrics for one image pair");
    c_evl->add_option("original", evl_orig)->required();
    c_evl->add_option("despeckled", evl_desp)->required();
    c_evl->add_option("--clean", evl_clean);
    c_evl->add_option("--region", evl_region, "Homogeneous region: row col height width")->expected(4);
    c_evl->add_flag("--csv", evl.csv, "Also write metrics.csv");

    sdssar::DiagnoseArgs dia;
    std::string dia_image;
    std::optional<std::size_t> dia_k;
    auto* c_dia = app.add_subcommand("diagnose", "Sub-image difference and dependence diagnostics");
    c_dia->add_option("image", dia_image)->required();
    c_dia->add_option("--k", dia_k);

    std::string pc_x, pc_y;
    auto* c_pc = app.add_subcommand("pc-test", "Projection-correlation independence test");
    c_pc->add_option("x", pc_x, "Image (alone: RA pair of this image)")->required();
    c_pc->add_option("y", pc_y, "Aligned second image");
    std::optional<std::size_t> pc_n, pc_perms, pc_patch;
    c_pc->add_option("--n", pc_n);
    c_pc->add_option("--permutations", pc_perms);
    c_pc->add_option("--patch", pc_patch);

    sdssar::ProbeArgs prb;
    auto* c_prb = app.add_subcommand("convergence-probe", "Squared mean difference of pairs vs pair count");
    c_prb->add_option("--looks", prb.looks, "0 for a noise-free scene");
    c_prb->add_option("--sizes", prb.sizes)->delimiter(',');
    c_prb->add_option("--trials", prb.trials);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        sdssar::PipelineConfig cfg = sdssar::PipelineConfig::defaults(profile);
        if (!config_path.empty()) cfg.apply(sdssar::load_config_document(config_path));
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.out = out_dir;

        json result;
        if (*c_sim) {
            for (const auto& s : sim_inputs) sim.inputs.emplace_back(s);
            if (sim_looks) cfg.looks = *sim_looks;
            result = sdssar::cmd_simulate(cfg, sim);
        } else if (*c_smp) {
            smp.image = smp_image;
            if (smp_k) cfg.train.k = *smp_k;
            result = sdssar::cmd_sample(cfg, smp);
        } else if (*c_trn) {
            if (trn_epochs) cfg.train.epochs = *trn_epochs;
            if (!trn_dataset.empty()) cfg.dataset = trn_dataset;
            result = sdssar::cmd_train(cfg, trn);
        } else if (*c_dsp) {
            dsp.params = dsp_params;
            dsp.input = dsp_in;
            dsp.output = dsp_out;
            result = sdssar::cmd_despeckle(cfg, dsp);
        } else if (*c_evl) {
            evl.original = evl_orig;
            evl.despeckled = evl_desp;
            if (!evl_clean.empty()) evl.clean = evl_clean;
            for (std::size_t i = 0; i + 3 < evl_region.size(); i += 4) {
                cfg.regions.push_back({evl_region[i], evl_region[i + 1], evl_region[i + 2], evl_region[i + 3]});
            }
            result = sdssar::cmd_evaluate(cfg, evl);
        } else if (*c_dia) {
            dia.image = dia_image;
            if (dia_k) cfg.train.k = *dia_k;
            result = sdssar::cmd_diagnose(cfg, dia);
        } else if (*c_pc) {
            if (pc_n) cfg.pc_samples = *pc_n;
            if (pc_perms) cfg.permutations = *pc_perms;
            if (pc_patch) cfg.patch = *pc_patch;
            sdssar::PcTestArgs a{pc_x, std::nullopt};
            if (!pc_y.empty()) a.y_image = pc_y;
            result = sdssar::cmd_pc_test(cfg, a);
        } else if (*c_prb) {
            result = sdssar::cmd_convergence_probe(cfg, prb);
        }
        std::cout << result.dump(2) << std::endl;
        return 0;
    } catch (const sdssar::TrainingDiverged& e) {
        return fail(std::string(sdssar::to_string(e.kind())), e.what(), {{"epoch", e.epoch()}});
    } catch (const sdssar::Error& e) {
        return fail(std::string(sdssar::to_string(e.kind())), e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
}
