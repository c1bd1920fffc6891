#pragma once

#include "laoram/metrics.hpp"
#include "laoram/traces.hpp"
#include "laoram/tree_store.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace laoram {

struct ScheduleSpec {
    enum class Kind { uniform, linear, step, explicit_list };
    Kind kind = Kind::uniform;
    std::uint32_t first = 4;   // z (uniform), root (linear), internal (step)
    std::uint32_t second = 4;  // leaf size for linear and step
    std::vector<std::uint32_t> sizes;

    BucketSchedule build(std::uint32_t height) const;
    /// `uniform:4`, `linear:8:4`, `step:6:4`, `explicit:8/6/4`.
    static ScheduleSpec parse(const std::string &text);
    std::string label() const;
};

struct TraceSpec {
    TraceSource kind = TraceSource::permutation;
    std::uint64_t epochs = 1;
    std::uint64_t count = 0;  // gaussian; 0 means n_blocks
    double mean_frac = 0.5;
    double stddev_frac = 0.15;
    std::uint64_t group = 8;  // grouped
    std::string path;

    /// `permutation:2`, `gaussian:100000`, `grouped:4:2`, `file:trace.txt`.
    static TraceSpec parse(const std::string &text);
    std::string label() const;
};

struct Seeds {
    std::uint64_t init = 1;
    std::uint64_t plan = 4;
    std::uint64_t remap = 2;
    std::uint64_t evict = 3;
    std::uint64_t trace = 5;
};

enum class Mode { laoram, pathoram };
enum class PathoramSource { uniform, planned };

struct EvictionSpec {
    bool enabled = true;
    std::uint64_t high = 500;
    std::uint64_t low = 50;
    std::uint64_t max_iterations = 0;  // 0: engine default
};

struct ExperimentConfig {
    std::uint64_t n_blocks = 1024;
    std::uint32_t height = 10;
    std::uint64_t block_size = kDefaultBlockSize;
    ScheduleSpec schedule;
    std::uint32_t superblock_size = 1;
    std::uint64_t window = 0;     // preprocessor batch, trace entries; 0 = whole trace
    std::uint64_t lookahead = 0;  // plans visible ahead of the engine, trace entries; 0 = all
    EvictionSpec eviction;
    TraceSpec trace;
    Seeds seeds;
    Mode mode = Mode::laoram;
    PathoramSource pathoram_source = PathoramSource::uniform;
    bool stash_hit_dummy_read = false;
    std::uint64_t queue_capacity = 1024;
    bool compare_baseline = false;

    /// Parses a config object. Unknown keys and wrong types are reported
    /// together as one ConfigError; omitted keys keep their defaults
    /// (height defaults to ceil(log2 n_blocks)).
    static ExperimentConfig from_json(const nlohmann::json &j);
    nlohmann::ordered_json to_json() const;

    /// Cross-field violations; empty when the config is runnable.
    std::vector<std::string> violations() const;
    /// Throws ConfigError listing every violation.
    void validate() const;

    TreeGeometry geometry() const;
    /// The PathORAM run that traffic reductions are measured against.
    ExperimentConfig baseline() const;
};

ExperimentConfig load_config(const std::filesystem::path &path);

AccessTrace build_trace(const ExperimentConfig &config);

struct RunResult {
    Counters counters;
    std::vector<FetchRecord> leaf_log;
    std::uint64_t final_stash = 0;
    std::uint64_t num_leaves = 0;
    std::uint64_t plans = 0;
    std::vector<std::uint8_t> snapshot;  // only with RunOptions::snapshot
};

struct RunOptions {
    bool snapshot = false;
};

/// trace -> preprocessor thread -> bounded queue -> engine -> counters.
RunResult run_experiment(const ExperimentConfig &config, const RunOptions &options = {});

/// Chi-square uniformity of every logged fetch, leaves folded into the most
/// power-of-two cells that still average five draws each. nullopt when the
/// log is too short for two cells.
std::optional<ChiSquareResult> leaf_uniformity(const RunResult &result);

std::string fnv1a_hex(const std::string &bytes);
std::string timeline_csv(const Counters &counters);
std::string leaf_log_csv(const std::vector<FetchRecord> &log);

nlohmann::ordered_json summary_json(const ExperimentConfig &config, const RunResult &result,
                                    const RunResult *baseline);

struct SweepRow {
    std::string label;
    ExperimentConfig config;
    RunResult result;
    std::optional<double> traffic_reduction;
};

/// Axis is one of S, schedule, trace, watermarks. Emits one baseline row per
/// distinct trace, followed by one row per value.
std::vector<SweepRow> sweep(const ExperimentConfig &config, const std::string &axis,
                            const std::vector<std::string> &values);
std::string sweep_csv(const std::vector<SweepRow> &rows);

struct ValidationReport {
    std::vector<std::string> violations;
    std::uint64_t raw_bytes = 0;
    std::uint64_t tree_bytes = 0;
    std::uint64_t uniform_bytes = 0;  // same tree with every bucket at the leaf size
    std::uint64_t path_slots = 0;

    bool ok() const noexcept { return violations.empty(); }
    double overhead_vs_uniform() const;
    nlohmann::ordered_json to_json() const;
};

/// Never throws for config problems; they become violations.
ValidationReport validate_config(const nlohmann::json &j);

} // namespace laoram
