// Command-line experiment runner: run, sweep, validate.

#include "laoram/errors.hpp"
#include "laoram/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace laoram;

namespace {

void write_file(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << text;
}

void apply_seed(ExperimentConfig &config, const std::string &seed) {
    if (seed.empty()) {
        return;
    }
    std::uint64_t base = 0;
    if (seed == "auto") {
        std::random_device rd;
        base = (std::uint64_t{rd()} << 32) ^ rd();
    } else {
        try {
            std::size_t used = 0;
            base = std::stoull(seed, &used);
            if (used != seed.size()) {
                throw std::invalid_argument(seed);
            }
        } catch (const std::logic_error &) {
            throw ConfigError("--seed expects 'auto' or an unsigned integer, got '" + seed + "'");
        }
    }
    config.seeds = {base, base + 1, base + 2, base + 3, base + 4};
}

int cmd_run(const std::string &config_path, const std::string &out_dir, const std::string &seed,
            const std::string &snapshot_path) {
    auto config = load_config(config_path);
    apply_seed(config, seed);
    RunOptions options;
    options.snapshot = !snapshot_path.empty();
    const auto result = run_experiment(config, options);
    std::optional<RunResult> baseline;
    if (config.compare_baseline) {
        baseline = run_experiment(config.baseline());
    }
    const auto summary = summary_json(config, result, baseline ? &*baseline : nullptr);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    write_file(dir / "timeline.csv", timeline_csv(result.counters));
    write_file(dir / "leaf_log.csv", leaf_log_csv(result.leaf_log));
    if (!seed.empty()) {
        write_file(dir / "config.json", config.to_json().dump(2) + "\n");
    }
    if (options.snapshot) {
        std::ofstream snap(snapshot_path, std::ios::binary);
        snap.write(reinterpret_cast<const char *>(result.snapshot.data()),
                   static_cast<std::streamsize>(result.snapshot.size()));
    }
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_sweep(const std::string &config_path, const std::string &axis,
              const std::vector<std::string> &values, const std::string &out_path) {
    const auto config = load_config(config_path);
    const auto csv = sweep_csv(sweep(config, axis, values));
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        write_file(out_path, csv);
    }
    return 0;
}

int cmd_validate(const std::string &config_path) {
    std::ifstream in(config_path);
    if (!in) {
        throw ConfigError("cannot open config file " + config_path);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError("config " + config_path + " is not valid JSON: " + e.what());
    }
    const auto report = validate_config(j);
    std::cout << report.to_json().dump(2) << "\n";
    return report.ok() ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Look-ahead ORAM simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", seed, snapshot, axis, sweep_out;
    std::vector<std::string> values;

    auto *run = app.add_subcommand("run", "run one experiment");
    run->add_option("--config", config_path, "JSON config")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "'auto' or a base seed overriding the config seeds");
    run->add_option("--snapshot", snapshot, "write the final tree image here");

    auto *sw = app.add_subcommand("sweep", "one run per value along an axis");
    sw->add_option("--config", config_path, "JSON config")->required();
    sw->add_option("--axis", axis, "S | schedule | trace | watermarks")->required();
    sw->add_option("--values", values, "comma separated values")->required()->delimiter(',');
    sw->add_option("--out", sweep_out, "CSV file (default stdout)");

    auto *val = app.add_subcommand("validate", "check a config and report storage");
    val->add_option("--config", config_path, "JSON config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path, out_dir, seed, snapshot);
        }
        if (sw->parsed()) {
            return cmd_sweep(config_path, axis, values, sweep_out);
        }
        return cmd_validate(config_path);
    } catch (const EvictionGuardError &e) {
        std::cerr << "error: eviction guard: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError &e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
