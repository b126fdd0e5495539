#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rflnn/data_io.hpp"
#include "rflnn/freqgen.hpp"
#include "rflnn/networks.hpp"
#include "rflnn/poisson.hpp"
#include "rflnn/spectrum.hpp"

namespace rflnn {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "RFLNN_OUTPUT_DIR";

enum class ExperimentKind { fp_sinc, fp_dataset, freq_guided_compare, poisson_bench };

std::string_view to_string(ExperimentKind kind);

struct FpSettings {
    std::vector<GrowthPlan> plans;  // one per model family, in the order elm, bls, stacked_bls
    FpOptions options;
    double threshold = 0.05;
    std::optional<std::pair<double, double>> input_range;  // 1-D inputs rescaled onto this interval
};

struct PoissonSettings {
    int dim = 1;
    Index n = 256;
    BenchmarkOptions bench;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::fp_sinc;
    std::vector<std::uint64_t> seeds;
    std::optional<std::filesystem::path> output_dir;
    int jobs = 1;
    DatasetSource dataset;
    FpSettings fp;
    BlsConfig bls;
    CompareOptions compare;
    PoissonSettings poisson;

    std::string canonical;  // normalized JSON text of the input
    std::string hash;       // FNV-1a 64 of `canonical`, hex
};

/// JSON Schema (draft 2020-12 subset) that every config must satisfy.
const std::string& config_schema();

/// Parses and validates. Any problem throws ConfigError whose message starts
/// with the offending field path, e.g. "model.bls.feature_nodes: must be >= 1".
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// $RFLNN_OUTPUT_DIR when set, otherwise ./rflnn-output.
std::filesystem::path default_output_dir();

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;  // overrides the config
    std::optional<int> jobs;
};

struct RunResult {
    std::filesystem::path output_dir;
    std::vector<std::string> artifacts;  // relative to output_dir
    std::string summary;
};

/// Runs the experiment and writes its artifacts plus run_manifest.json and
/// summary.txt. On a runtime failure the manifest is still written with
/// status "partial" and the exception is rethrown.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

std::string fnv1a_hex(const std::string& text);

} // namespace rflnn
