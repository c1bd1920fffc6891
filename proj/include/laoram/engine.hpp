#pragma once

#include "laoram/client.hpp"
#include "laoram/metrics.hpp"
#include "laoram/tree_store.hpp"
#include "laoram/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace laoram {

enum class AccessOp { read, write };

struct AccessRequest {
    BlockId id;
    AccessOp op = AccessOp::read;
    std::vector<std::uint8_t> data;  // write only, exactly block_size bytes

    static AccessRequest read(BlockId id) { return {id, AccessOp::read, {}}; }
    static AccessRequest write(BlockId id, std::vector<std::uint8_t> data) {
        return {id, AccessOp::write, std::move(data)};
    }
};

/// Supplies the new leaf of a block that has just been accessed.
class PathSource {
public:
    virtual ~PathSource() = default;
    virtual LeafId assign(BlockId id, std::uint64_t num_leaves) = 0;
};

/// i.i.d. uniform leaves from a dedicated stream.
class UniformSource final : public PathSource {
public:
    explicit UniformSource(std::uint64_t seed) : stream_(seed) {}

    LeafId assign(BlockId, std::uint64_t num_leaves) override {
        return stream_.draw(num_leaves);
    }
    const LeafStream &stream() const noexcept { return stream_; }

private:
    LeafStream stream_;
};

/// Leaves taken from preprocessor plans: consumes the block's current plan
/// and hands out the leaf of its next one, or a fallback draw when the block
/// has no further plan. Driving PathORAM with a single-member plan stream
/// through this source is exactly LAORAM with superblock size one.
class PlannedSource final : public PathSource {
public:
    PlannedSource(PlanQueue &plans, std::uint64_t fallback_seed)
        : plans_(plans), fallback_(fallback_seed) {}

    LeafId assign(BlockId id, std::uint64_t num_leaves) override;
    const LeafStream &fallback_stream() const noexcept { return fallback_; }

private:
    PlanQueue &plans_;
    LeafStream fallback_;
};

/// Background eviction trigger: drain once occupancy exceeds `high_watermark`
/// until it is back at or below `low_watermark`.
class EvictionPolicy {
public:
    EvictionPolicy() = default;
    EvictionPolicy(std::uint64_t high_watermark, std::uint64_t low_watermark);

    static EvictionPolicy disabled() {
        EvictionPolicy p;
        p.enabled_ = false;
        return p;
    }

    bool enabled() const noexcept { return enabled_; }
    std::uint64_t high_watermark() const noexcept { return high_; }
    std::uint64_t low_watermark() const noexcept { return low_; }

private:
    std::uint64_t high_ = 500;
    std::uint64_t low_ = 50;
    bool enabled_ = true;
};

struct EngineOptions {
    EvictionPolicy policy;
    std::uint64_t remap_seed = 2;  // fallback remaps in LAORAM mode
    std::uint64_t evict_seed = 3;  // dummy-read leaves
    /// In LAORAM mode, issue a dummy read when a block with no pending plan
    /// is served straight from the stash, keeping one fetch per request.
    bool stash_hit_dummy_read = false;
    /// Dummy reads allowed per drain episode; 0 means 64 * height (min 64).
    std::uint64_t max_drain_reads = 0;
    /// Negative control for obliviousness tests: never change a block's
    /// leaf after an access. Breaks ORAM security on purpose.
    bool freeze_positions = false;
};

/// Single-threaded ORAM client + server simulation: PathORAM access,
/// superblock (look-ahead) access, greedy write-back and background eviction.
class Engine {
public:
    /// Assigns each block a uniform leaf from a stream seeded with `init_seed`,
    /// applies `initial_leaves` overrides, then bulk-loads every block (zero
    /// payload) as deep as possible on its own path; overflow goes to the stash.
    Engine(std::uint64_t n_blocks, TreeGeometry geometry, std::uint64_t init_seed,
           EngineOptions options = {},
           std::span<const std::pair<BlockId, LeafId>> initial_leaves = {});

    /// Classic PathORAM access; `source` picks the block's next leaf.
    std::vector<std::uint8_t> pathoram_access(const AccessRequest &req, PathSource &source);

    /// Superblock access driven by the loaded plan queue. The first request
    /// of a plan fetches its shared path; the following `span - 1` requests
    /// are served from the stash and the path is written back after the last.
    std::vector<std::uint8_t> laoram_access(const AccessRequest &req);

    /// Queue a preprocessor plan for laoram_access.
    void load_plan(SuperblockPlan plan) { plans_.push(std::move(plan)); }

    /// One dummy read: uniform leaf, no remapping, no plan consumption.
    void background_evict();

    /// Drains the stash if it is above the high watermark. Returns the number
    /// of dummy reads issued; throws EvictionGuardError if the guard trips.
    std::uint64_t enforce_policy();

    /// Greedy deepest-first write-back of the stash along `leaf`. Only valid
    /// right after that path was read into the stash.
    void write_back(LeafId leaf);

    /// Full scan; throws InvariantError if some block is missing, duplicated,
    /// or resident off its assigned path.
    void check_invariants() const;

    bool superblock_open() const noexcept { return open_.has_value(); }

    const TreeStore &tree() const noexcept { return tree_; }
    const PositionMap &positions() const noexcept { return positions_; }
    const Stash &stash() const noexcept { return stash_; }
    const PlanQueue &plans() const noexcept { return plans_; }
    const std::vector<FetchRecord> &leaf_log() const noexcept { return log_; }
    std::uint64_t n_blocks() const noexcept { return n_blocks_; }
    const TreeGeometry &geometry() const noexcept { return tree_.geometry(); }
    const EngineOptions &options() const noexcept { return options_; }

    /// Counter snapshot; blocks_transferred counts fetched slots.
    Counters counters() const;

private:
    struct OpenSuperblock {
        std::vector<BlockId> members;
        std::uint64_t remaining = 0;
        std::optional<LeafId> fetched_leaf;
    };

    void check_request(const AccessRequest &req) const;
    void fetch_path(LeafId leaf, FetchKind kind);
    std::vector<std::uint8_t> serve(const AccessRequest &req);
    LeafId planned_leaf(BlockId id);
    void remap(BlockId id, LeafId leaf);
    void finish_request();
    void close_superblock();
    std::vector<std::uint8_t> pathoram_body(const AccessRequest &req, PathSource &source);

    std::uint64_t n_blocks_;
    TreeStore tree_;
    PositionMap positions_;
    Stash stash_;
    PlanQueue plans_;
    EngineOptions options_;
    LeafStream remap_stream_;
    LeafStream evict_stream_;

    std::optional<OpenSuperblock> open_;
    std::optional<LeafId> unwritten_path_;
    std::uint64_t step_ = 0;
    std::uint64_t real_accesses_ = 0;
    std::uint64_t real_path_reads_ = 0;
    std::uint64_t dummy_reads_ = 0;
    std::vector<FetchRecord> log_;
    std::vector<StashSample> timeline_;
};

} // namespace laoram
