#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdssar/metrics.hpp"
#include "sdssar/training.hpp"

namespace sdssar {

namespace fs = std::filesystem;

struct PipelineConfig {
    std::string profile = "desk";
    std::uint64_t seed = 0;
    fs::path out = "sdssar_out";
    fs::path dataset;  ///< empty: a procedural corpus is generated
    int looks = 4;
    std::size_t synthetic_count = 8;
    std::size_t synthetic_size = 64;
    TrainConfig train;  ///< train.seed is overwritten by `seed`
    std::size_t checkpoint_every = 10;
    std::vector<Region> regions;
    std::optional<Region> target;
    std::size_t pc_samples = 128;
    std::size_t permutations = 500;
    double alpha = 0.05;
    std::size_t patch = 1;
    std::size_t diagnose_seeds = 20;
    std::vector<std::size_t> probe_sizes{16, 64, 256, 1024};
    std::size_t probe_trials = 1000;

    /// "desk": 8 procedural 64x64 scenes, 30 epochs, log-form loss.
    /// "paper": 256 tiles, 300 epochs, batch 4, plain loss.
    static PipelineConfig defaults(const std::string& profile);

    /// Overrides from a parsed config document; unknown keys are rejected.
    void apply(const nlohmann::json& doc);
    void validate() const;
    nlohmann::json to_json() const;
    TrainConfig train_config() const;
};

/// Reads a .toml or .json config file into a JSON document.
nlohmann::json load_config_document(const fs::path& path);

struct SimulateArgs {
    std::vector<fs::path> inputs;  ///< empty: dataset directory, else procedural corpus
};

struct SampleArgs {
    fs::path image;
    std::string sampler = "ra";  ///< ra | ordered
    bool decorrelate = false;
};

struct TrainArgs {
    bool resume = false;
};

struct DespeckleArgs {
    fs::path params;
    fs::path input;
    fs::path output;  ///< empty: <out>/despeckled.<input extension>
};

struct EvaluateArgs {
    fs::path original;
    fs::path despeckled;
    std::optional<fs::path> clean;
    bool csv = false;
};

struct DiagnoseArgs {
    fs::path image;
};

struct PcTestArgs {
    fs::path x_image;
    std::optional<fs::path> y_image;  ///< absent: RA pair of x_image
};

struct ProbeArgs {
    int looks = 1;  ///< 0: noise-free scene
    std::vector<std::size_t> sizes;  ///< empty: config
    std::size_t trials = 0;          ///< 0: config
};

nlohmann::json cmd_simulate(const PipelineConfig& cfg, const SimulateArgs& args);
nlohmann::json cmd_sample(const PipelineConfig& cfg, const SampleArgs& args);
nlohmann::json cmd_train(const PipelineConfig& cfg, const TrainArgs& args);
nlohmann::json cmd_despeckle(const PipelineConfig& cfg, const DespeckleArgs& args);
nlohmann::json cmd_evaluate(const PipelineConfig& cfg, const EvaluateArgs& args);
nlohmann::json cmd_diagnose(const PipelineConfig& cfg, const DiagnoseArgs& args);
nlohmann::json cmd_pc_test(const PipelineConfig& cfg, const PcTestArgs& args);
nlohmann::json cmd_convergence_probe(const PipelineConfig& cfg, const ProbeArgs& args);

/// Training corpus of a config: dataset directory (simulate manifest or loose
/// images) or the procedural speckled corpus.
std::vector<IntensityImage> load_training_set(const PipelineConfig& cfg,
                                              std::vector<std::string>* warnings = nullptr);

/// MetricsReport as JSON; an infinite PSNR becomes the string "inf".
nlohmann::json metrics_to_json(const MetricsReport& report);

}  // namespace sdssar
