#pragma once

#include "laoram/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace laoram {

inline constexpr std::uint64_t kDefaultBlockSize = 128;

/// Per-level bucket capacities, index 0 = root, last = leaf level.
///
/// Only non-increasing schedules are accepted: a uniform schedule is the
/// classic PathORAM tree, a strictly decreasing one is a fat tree.
class BucketSchedule {
public:
    BucketSchedule() = default;
    explicit BucketSchedule(std::vector<std::uint32_t> sizes_by_level);

    static BucketSchedule uniform(std::uint32_t height, std::uint32_t z);

    /// Linear interpolation from `root_size` at level 0 to `leaf_size` at
    /// level `height`, rounded to nearest.
    static BucketSchedule linear(std::uint32_t height, std::uint32_t root_size,
                                 std::uint32_t leaf_size);

    /// Constant `internal_size` on every non-leaf level, `leaf_size` at the leaves.
    static BucketSchedule step(std::uint32_t height, std::uint32_t internal_size,
                               std::uint32_t leaf_size);

    const std::vector<std::uint32_t> &sizes() const noexcept { return sizes_; }
    std::uint32_t at(std::uint32_t level) const { return sizes_.at(level); }
    std::size_t levels() const noexcept { return sizes_.size(); }
    bool is_uniform() const noexcept;

    /// Slots on one root-to-leaf path.
    std::uint64_t path_slots() const noexcept;

    friend bool operator==(const BucketSchedule &, const BucketSchedule &) = default;

private:
    std::vector<std::uint32_t> sizes_;
};

struct TreeGeometry {
    std::uint32_t height = 0;  // leaf level index; levels are 0..height
    BucketSchedule schedule;
    std::uint64_t block_size = kDefaultBlockSize;

    TreeGeometry() = default;
    /// Throws ConfigError unless schedule has height+1 levels and block_size > 0.
    TreeGeometry(std::uint32_t height, BucketSchedule schedule,
                 std::uint64_t block_size = kDefaultBlockSize);

    std::uint64_t num_leaves() const noexcept { return std::uint64_t{1} << height; }
    std::uint64_t num_nodes() const noexcept { return (std::uint64_t{2} << height) - 1; }
    std::uint64_t total_slots() const noexcept;
};

/// Heap node indices (root = 1) from root to the leaf bucket of `leaf`.
std::vector<std::uint64_t> path_nodes(LeafId leaf, const TreeGeometry &geometry);

/// Deepest level at which the paths to `a` and `b` still share a node.
std::uint32_t common_prefix_level(LeafId a, LeafId b, const TreeGeometry &geometry);

/// Bytes needed to hold every slot of the tree, dummies included.
std::uint64_t storage_bytes(const TreeGeometry &geometry);

struct Block {
    BlockId id;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Block &, const Block &) = default;
};

/// One tree node. Always carries exactly schedule[level] slots; empty
/// optionals are dummy slots.
struct Bucket {
    std::uint32_t level = 0;
    std::vector<std::optional<Block>> slots;

    std::size_t real_count() const noexcept;
};

struct TransferCounters {
    std::uint64_t paths_read = 0;
    std::uint64_t paths_written = 0;
    std::uint64_t slots_read = 0;
    std::uint64_t slots_written = 0;
};

/// Server-side bucket storage. Slots are stored flat in heap (level) order,
/// dummies materialised, so every path transfer moves a fixed slot count.
class TreeStore {
public:
    /// Uninitialised store; every path operation throws StateError.
    TreeStore() = default;
    explicit TreeStore(TreeGeometry geometry);

    bool initialized() const noexcept { return initialized_; }
    const TreeGeometry &geometry() const noexcept { return geometry_; }

    std::vector<Bucket> read_path(LeafId leaf);

    /// Replaces the whole path. Every bucket must sit at its level, carry
    /// exactly the level's slot count and full-size payloads, otherwise
    /// InvariantError and the store is left untouched.
    void write_path(LeafId leaf, std::span<const Bucket> buckets);

    /// Direct placement used by the bulk loader. Returns false if the node is full.
    bool try_place(std::uint64_t node, const Block &block);

    /// Visits every real block as (node index, block id). No accounting.
    template <typename Fn>
    void for_each_real(Fn &&fn) const {
        for (std::uint64_t node = 1; node <= geometry_.num_nodes(); ++node) {
            const auto [first, count] = slot_range(node);
            for (std::uint64_t s = first; s < first + count; ++s) {
                if (ids_[s] != kDummyId) {
                    fn(node, BlockId{ids_[s]});
                }
            }
        }
    }

    std::uint64_t real_blocks() const noexcept { return real_blocks_; }
    const TransferCounters &transfers() const noexcept { return transfers_; }

    /// Flat little-endian image: header then every slot in level order.
    std::vector<std::uint8_t> snapshot() const;
    static TreeStore from_snapshot(std::span<const std::uint8_t> bytes);

    static constexpr std::uint64_t kDummyId = ~std::uint64_t{0};

private:
    struct SlotRange {
        std::uint64_t first;
        std::uint64_t count;
    };

    SlotRange slot_range(std::uint64_t node) const;
    void require_initialized() const;

    TreeGeometry geometry_;
    bool initialized_ = false;
    std::vector<std::uint64_t> level_first_slot_;
    std::vector<std::uint64_t> ids_;
    std::vector<std::uint8_t> payloads_;
    std::uint64_t real_blocks_ = 0;
    TransferCounters transfers_;
};

} // namespace laoram
