#pragma once

#include "laoram/tree_store.hpp"
#include "laoram/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

namespace laoram {

/// Dense BlockId -> LeafId table held by the trusted client.
class PositionMap {
public:
    PositionMap() = default;
    /// Every block gets an independent uniform leaf from `stream`.
    PositionMap(std::uint64_t n_blocks, std::uint64_t num_leaves, LeafStream &stream);

    LeafId lookup(BlockId id) const;
    /// Returns the previous leaf.
    LeafId update(BlockId id, LeafId leaf);

    std::uint64_t size() const noexcept { return leaves_.size(); }
    std::uint64_t num_leaves() const noexcept { return num_leaves_; }
    const std::vector<LeafId> &entries() const noexcept { return leaves_; }

private:
    void check_id(BlockId id) const;

    std::vector<LeafId> leaves_;
    std::uint64_t num_leaves_ = 1;
};

/// Client-side overflow buffer, ordered by BlockId so that every scan over
/// it (write-back candidate selection in particular) is deterministic.
class Stash {
public:
    /// Throws InvariantError if a block with the same id is already stashed.
    void insert(Block block);
    std::optional<Block> take(BlockId id);

    bool contains(BlockId id) const { return blocks_.contains(id.value); }
    Block *find(BlockId id);
    const Block *find(BlockId id) const;

    std::uint64_t occupancy() const noexcept { return blocks_.size(); }
    std::uint64_t peak() const noexcept { return peak_; }

    auto begin() const { return blocks_.begin(); }
    auto end() const { return blocks_.end(); }

private:
    std::map<std::uint64_t, Block> blocks_;
    std::uint64_t peak_ = 0;
};

/// A superblock bin from the preprocessor: members that will be fetched by a
/// single path read of `future_leaf`.
struct SuperblockPlan {
    std::uint64_t sequence_number = 0;
    std::vector<BlockId> members;
    LeafId future_leaf;
    /// Number of consecutive trace requests the bin covers (members plus
    /// in-bin repeats). Zero means "exactly one request per member".
    std::uint64_t span = 0;

    std::uint64_t effective_span() const noexcept {
        return span == 0 ? members.size() : span;
    }
    bool contains(BlockId id) const;

    friend bool operator==(const SuperblockPlan &, const SuperblockPlan &) = default;
};

/// Pending plans, indexed per block. Each block sees its plans strictly in
/// production order; a plan can only be consumed once it is the head plan of
/// every one of its members.
class PlanQueue {
public:
    /// Plans must arrive with strictly increasing sequence numbers and
    /// distinct members.
    void push(SuperblockPlan plan);

    /// Lowest-sequence pending plan containing `id`, or nullptr. The pointer
    /// is valid until the plan is consumed.
    const SuperblockPlan *next_plan_for(BlockId id) const;

    /// Pending plan with the lowest sequence number, or nullptr.
    const SuperblockPlan *head() const;

    void consume_plan(const SuperblockPlan &plan);
    void consume_plan(std::uint64_t sequence_number);

    std::size_t size() const noexcept { return plans_.size(); }
    bool empty() const noexcept { return plans_.empty(); }
    std::uint64_t pushed() const noexcept { return pushed_; }

private:
    struct Entry {
        SuperblockPlan plan;
        // Sequence number of the next pending plan of members[i], if any.
        std::vector<std::optional<std::uint64_t>> next_for_member;
    };

    std::map<std::uint64_t, Entry> plans_;
    std::unordered_map<BlockId, std::uint64_t> head_;
    std::unordered_map<BlockId, std::uint64_t> tail_;
    std::optional<std::uint64_t> last_sequence_;
    std::uint64_t pushed_ = 0;
};

} // namespace laoram
