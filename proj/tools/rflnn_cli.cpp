#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "rflnn/data_io.hpp"
#include "rflnn/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kConfig = 2;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random functional-linked network experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 0;
    bool print_schema = false;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("-o,--output-dir", out_dir,
                    std::string("Output directory (default: $") + rflnn::kOutputDirEnv + " or ./rflnn-output)");
    run->add_option("-j,--jobs", jobs, "Worker threads for independent runs")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Check a config file against the schema");
    validate->add_option("config", config_path, "Experiment config (JSON)");
    validate->add_flag("--schema", print_schema, "Print the config schema and exit");

    auto* datasets = app.add_subcommand("datasets", "Dataset utilities");
    datasets->require_subcommand(1);
    std::string dataset_name;
    auto* fetch = datasets->add_subcommand("fetch-manifest", "Print the JSON manifest of a named dataset");
    fetch->add_option("name", dataset_name, "Dataset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*validate) {
            if (print_schema) {
                std::cout << rflnn::config_schema() << '\n';
                return kOk;
            }
            if (config_path.empty()) {
                std::cerr << "validate: a config path is required\n";
                return kConfig;
            }
            const auto cfg = rflnn::load_config(config_path);
            std::cout << "ok: " << rflnn::to_string(cfg.kind) << " config, hash " << cfg.hash << '\n';
            return kOk;
        }
        if (*fetch) {
            std::cout << rflnn::dataset_manifest(dataset_name) << '\n';
            return kOk;
        }
        const auto cfg = rflnn::load_config(config_path);
        rflnn::RunOptions opts;
        if (!out_dir.empty()) opts.output_dir = out_dir;
        if (jobs > 0) opts.jobs = jobs;
        const auto result = rflnn::run_experiment(cfg, opts);
        std::cout << result.summary;
        std::cout << "wrote " << result.artifacts.size() << " artifacts to " << result.output_dir.string() << '\n';
        return kOk;
    } catch (const rflnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
