#pragma once

// Shared by the property tests and the acceptance binary: drives an engine
// with random reads and writes and compares every read against a plain array.

#include "laoram/engine.hpp"
#include "laoram/preprocessor.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace laoram::oracle {

struct OracleRun {
    std::uint64_t n_blocks = 1024;
    TreeGeometry geometry{10, BucketSchedule::uniform(10, 4), 8};
    bool laoram = true;
    std::uint32_t superblock_size = 1;
    std::uint64_t ops = 10000;
    std::uint64_t seed = 1;
    // Concentrates ids on a hot set so superblocks contain repeats and the
    // stash sees pressure; 0 draws ids uniformly.
    std::uint64_t hot_set = 0;
    EvictionPolicy policy{EvictionPolicy::disabled()};
    bool check_every_op = true;
};

struct OracleOutcome {
    std::uint64_t reads_checked = 0;
    std::uint64_t invariant_checks = 0;
    std::uint64_t dummy_reads = 0;
    std::optional<std::string> failure;

    bool ok() const { return !failure.has_value(); }
};

inline std::vector<BlockId> oracle_trace(const OracleRun &run, std::mt19937_64 &rng) {
    std::vector<BlockId> trace;
    trace.reserve(run.ops);
    for (std::uint64_t i = 0; i < run.ops; ++i) {
        std::uint64_t id = rng() % run.n_blocks;
        if (run.hot_set != 0 && rng() % 4 != 0) {
            id = rng() % run.hot_set;
        }
        trace.push_back(BlockId{id});
    }
    return trace;
}

inline OracleOutcome run_ram_oracle(const OracleRun &run) {
    OracleOutcome out;
    std::mt19937_64 rng(run.seed);
    const auto trace = oracle_trace(run, rng);
    const auto block_size = run.geometry.block_size;

    std::vector<std::pair<BlockId, LeafId>> initial;
    std::vector<SuperblockPlan> plans;
    if (run.laoram) {
        LeafStream stream(run.seed + 101);
        plans = assign_paths(scan(trace, {run.superblock_size, 0}), run.geometry.num_leaves(),
                             stream);
        std::vector<bool> seen(run.n_blocks, false);
        for (const auto &p : plans) {
            for (auto m : p.members) {
                if (!seen[m.value]) {
                    seen[m.value] = true;
                    initial.emplace_back(m, p.future_leaf);
                }
            }
        }
    }

    EngineOptions options;
    options.policy = run.policy;
    options.remap_seed = run.seed + 202;
    Engine engine(run.n_blocks, run.geometry, run.seed + 303, options, initial);
    for (auto &p : plans) {
        engine.load_plan(std::move(p));
    }
    UniformSource uniform(run.seed + 404);

    std::vector<std::vector<std::uint8_t>> ram(run.n_blocks,
                                               std::vector<std::uint8_t>(block_size, 0));
    try {
        for (std::uint64_t i = 0; i < trace.size(); ++i) {
            const auto id = trace[i];
            const bool write = rng() % 2 == 0;
            AccessRequest req = AccessRequest::read(id);
            if (write) {
                std::vector<std::uint8_t> data(block_size);
                for (auto &b : data) {
                    b = static_cast<std::uint8_t>(rng());
                }
                ram[id.value] = data;
                req = AccessRequest::write(id, std::move(data));
            }
            const auto got = run.laoram ? engine.laoram_access(req)
                                        : engine.pathoram_access(req, uniform);
            if (got != ram[id.value]) {
                out.failure = "op " + std::to_string(i) + " on block " +
                              std::to_string(id.value) + " returned stale data";
                return out;
            }
            out.reads_checked += write ? 0 : 1;
            if (run.check_every_op || i + 1 == trace.size()) {
                engine.check_invariants();
                ++out.invariant_checks;
            }
        }
        // Every block must still hold its last written value.
        for (std::uint64_t id = 0; id < run.n_blocks; ++id) {
            const auto got = engine.pathoram_access(AccessRequest::read(BlockId{id}), uniform);
            if (got != ram[id]) {
                out.failure = "final sweep: block " + std::to_string(id) + " lost its value";
                return out;
            }
        }
        engine.check_invariants();
    } catch (const std::exception &e) {
        out.failure = e.what();
    }
    out.dummy_reads = engine.counters().dummy_reads;
    return out;
}

} // namespace laoram::oracle
