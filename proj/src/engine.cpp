#include "laoram/engine.hpp"

#include "laoram/errors.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace laoram {

LeafId PlannedSource::assign(BlockId id, std::uint64_t num_leaves) {
    if (const auto *current = plans_.next_plan_for(id)) {
        plans_.consume_plan(current->sequence_number);
    }
    if (const auto *next = plans_.next_plan_for(id)) {
        return next->future_leaf;
    }
    return fallback_.draw(num_leaves);
}

EvictionPolicy::EvictionPolicy(std::uint64_t high_watermark, std::uint64_t low_watermark)
    : high_(high_watermark), low_(low_watermark) {
    if (low_watermark >= high_watermark) {
        throw ConfigError("eviction low watermark (" + std::to_string(low_watermark) +
                          ") must be below the high watermark (" +
                          std::to_string(high_watermark) + ")");
    }
}

Engine::Engine(std::uint64_t n_blocks, TreeGeometry geometry, std::uint64_t init_seed,
               EngineOptions options, std::span<const std::pair<BlockId, LeafId>> initial_leaves)
    : n_blocks_(n_blocks),
      tree_(std::move(geometry)),
      options_(options),
      remap_stream_(options.remap_seed),
      evict_stream_(options.evict_seed) {
    const auto &geo = tree_.geometry();
    if (n_blocks > geo.num_leaves()) {
        throw CapacityError("tree with " + std::to_string(geo.num_leaves()) +
                            " leaves cannot host " + std::to_string(n_blocks) + " blocks");
    }
    LeafStream init_stream(init_seed);
    positions_ = PositionMap(n_blocks, geo.num_leaves(), init_stream);
    for (const auto &[id, leaf] : initial_leaves) {
        positions_.update(id, leaf);
    }

    for (std::uint64_t i = 0; i < n_blocks; ++i) {
        Block block{BlockId{i}, std::vector<std::uint8_t>(geo.block_size, 0)};
        std::uint64_t node = geo.num_leaves() + positions_.lookup(block.id).value;
        bool placed = false;
        for (; node != 0 && !placed; node >>= 1) {
            placed = tree_.try_place(node, block);
        }
        if (!placed) {
            stash_.insert(std::move(block));
        }
    }
}

void Engine::check_request(const AccessRequest &req) const {
    if (req.id.value >= n_blocks_) {
        throw RangeError("block " + std::to_string(req.id.value) + " outside [0, " +
                         std::to_string(n_blocks_) + ")");
    }
    if (req.op == AccessOp::write && req.data.size() != geometry().block_size) {
        throw ConfigError("write payload is " + std::to_string(req.data.size()) +
                          " bytes, block size is " + std::to_string(geometry().block_size));
    }
}

void Engine::fetch_path(LeafId leaf, FetchKind kind) {
    if (unwritten_path_) {
        throw StateError("path " + std::to_string(unwritten_path_->value) +
                         " is still checked out");
    }
    auto buckets = tree_.read_path(leaf);
    for (auto &bucket : buckets) {
        for (auto &slot : bucket.slots) {
            if (slot) {
                stash_.insert(std::move(*slot));
            }
        }
    }
    unwritten_path_ = leaf;
    log_.push_back({step_, leaf, kind});
    if (kind == FetchKind::real) {
        ++real_path_reads_;
    }
}

std::vector<std::uint8_t> Engine::serve(const AccessRequest &req) {
    Block *block = stash_.find(req.id);
    if (block == nullptr) {
        throw InvariantError("block " + std::to_string(req.id.value) +
                             " not in the stash after its fetch");
    }
    if (req.op == AccessOp::write) {
        block->payload = req.data;
    }
    return block->payload;
}

void Engine::remap(BlockId id, LeafId leaf) {
    if (!options_.freeze_positions) {
        positions_.update(id, leaf);
    }
}

LeafId Engine::planned_leaf(BlockId id) {
    if (const auto *next = plans_.next_plan_for(id)) {
        return next->future_leaf;
    }
    return remap_stream_.draw(geometry().num_leaves());
}

void Engine::finish_request() {
    timeline_.push_back({step_, stash_.occupancy()});
}

std::vector<std::uint8_t> Engine::pathoram_access(const AccessRequest &req, PathSource &source) {
    check_request(req);
    if (open_) {
        throw StateError("PathORAM access while a superblock is open");
    }
    step_ = real_accesses_++;
    return pathoram_body(req, source);
}

std::vector<std::uint8_t> Engine::pathoram_body(const AccessRequest &req, PathSource &source) {
    // The block's path is read even when the block already sits in the
    // stash, so the server sees one fetch per request either way.
    const auto leaf = positions_.lookup(req.id);
    fetch_path(leaf, FetchKind::real);
    auto out = serve(req);
    remap(req.id, source.assign(req.id, geometry().num_leaves()));
    write_back(leaf);
    enforce_policy();
    finish_request();
    return out;
}

namespace {

class StreamSource final : public PathSource {
public:
    explicit StreamSource(LeafStream &stream) : stream_(stream) {}
    LeafId assign(BlockId, std::uint64_t num_leaves) override { return stream_.draw(num_leaves); }

private:
    LeafStream &stream_;
};

} // namespace

std::vector<std::uint8_t> Engine::laoram_access(const AccessRequest &req) {
    check_request(req);
    step_ = real_accesses_++;

    if (open_) {
        if (std::find(open_->members.begin(), open_->members.end(), req.id) ==
            open_->members.end()) {
            throw InvariantError("request for block " + std::to_string(req.id.value) +
                                 " inside a superblock it does not belong to");
        }
        auto out = serve(req);
        if (--open_->remaining == 0) {
            close_superblock();
        }
        finish_request();
        return out;
    }

    const SuperblockPlan *head = plans_.head();
    if (head == nullptr || !head->contains(req.id)) {
        if (plans_.next_plan_for(req.id) != nullptr) {
            throw InvariantError("block " + std::to_string(req.id.value) +
                                 " requested ahead of its plan");
        }
        if (stash_.contains(req.id)) {
            auto out = serve(req);
            if (options_.stash_hit_dummy_read) {
                background_evict();
            }
            enforce_policy();
            finish_request();
            return out;
        }
        StreamSource fallback(remap_stream_);
        return pathoram_body(req, fallback);
    }

    const SuperblockPlan plan = *head;
    open_ = OpenSuperblock{plan.members, plan.effective_span(), std::nullopt};

    // Members not yet bound to the plan's leaf (never planned before, or
    // remapped by fallback) are fetched from wherever they live; they stay
    // pinned in the stash for the rest of the superblock.
    for (auto m : plan.members) {
        if (!stash_.contains(m) && positions_.lookup(m) != plan.future_leaf) {
            const auto leaf = positions_.lookup(m);
            fetch_path(leaf, FetchKind::real);
            write_back(leaf);
        }
    }
    fetch_path(plan.future_leaf, FetchKind::real);
    open_->fetched_leaf = plan.future_leaf;
    for (auto m : plan.members) {
        if (!stash_.contains(m)) {
            throw InvariantError("plan " + std::to_string(plan.sequence_number) + " expects block " +
                                 std::to_string(m.value) + " on leaf " +
                                 std::to_string(plan.future_leaf.value) +
                                 " but the position map disagrees");
        }
    }

    plans_.consume_plan(plan.sequence_number);
    for (auto m : plan.members) {
        remap(m, planned_leaf(m));
    }

    auto out = serve(req);
    if (--open_->remaining == 0) {
        close_superblock();
    }
    finish_request();
    return out;
}

void Engine::close_superblock() {
    const auto fetched = *open_->fetched_leaf;
    open_.reset();
    write_back(fetched);
    enforce_policy();
}

void Engine::background_evict() {
    if (open_) {
        throw StateError("background eviction while a superblock is open");
    }
    const auto leaf = evict_stream_.draw(geometry().num_leaves());
    fetch_path(leaf, FetchKind::dummy);
    ++dummy_reads_;
    write_back(leaf);
}

std::uint64_t Engine::enforce_policy() {
    const auto &policy = options_.policy;
    if (!policy.enabled() || stash_.occupancy() <= policy.high_watermark()) {
        return 0;
    }
    const std::uint64_t guard =
        options_.max_drain_reads != 0
            ? options_.max_drain_reads
            : std::max<std::uint64_t>(64, std::uint64_t{64} * geometry().height);
    std::uint64_t issued = 0;
    while (stash_.occupancy() > policy.low_watermark()) {
        if (issued == guard) {
            throw EvictionGuardError("stash still holds " + std::to_string(stash_.occupancy()) +
                                     " blocks after " + std::to_string(issued) +
                                     " dummy reads (low watermark " +
                                     std::to_string(policy.low_watermark()) + ")");
        }
        background_evict();
        ++issued;
    }
    return issued;
}

void Engine::write_back(LeafId leaf) {
    if (!unwritten_path_ || *unwritten_path_ != leaf) {
        throw StateError("write-back of path " + std::to_string(leaf.value) +
                         " that was not just read");
    }
    const auto &geo = geometry();
    const std::uint32_t height = geo.height;

    // Candidates grouped by the deepest level they may occupy on this path;
    // the stash iterates in BlockId order, so ties break toward smaller ids.
    std::vector<std::vector<BlockId>> by_depth(height + 1);
    for (const auto &[key, block] : stash_) {
        const BlockId id{key};
        if (open_ && std::find(open_->members.begin(), open_->members.end(), id) !=
                         open_->members.end()) {
            continue;
        }
        const auto assigned = positions_.lookup(id).value;
        const auto depth = height - static_cast<std::uint32_t>(std::bit_width(assigned ^ leaf.value));
        by_depth[depth].push_back(id);
    }

    std::vector<std::size_t> cursor(height + 1, 0);
    std::vector<Bucket> buckets(height + 1);
    for (std::uint32_t level = height + 1; level-- > 0;) {
        auto &bucket = buckets[level];
        bucket.level = level;
        bucket.slots.resize(geo.schedule.at(level));
        std::size_t filled = 0;
        for (std::uint32_t depth = height + 1; depth-- > level && filled < bucket.slots.size();) {
            auto &list = by_depth[depth];
            while (filled < bucket.slots.size() && cursor[depth] < list.size()) {
                bucket.slots[filled++] = stash_.take(list[cursor[depth]++]);
            }
        }
    }
    tree_.write_path(leaf, buckets);
    unwritten_path_.reset();
}

void Engine::check_invariants() const {
    const auto &geo = geometry();
    std::vector<std::uint64_t> checked_out;
    if (unwritten_path_) {
        checked_out = path_nodes(*unwritten_path_, geo);
    }
    std::vector<std::uint8_t> seen(n_blocks_, 0);
    tree_.for_each_real([&](std::uint64_t node, BlockId id) {
        if (std::find(checked_out.begin(), checked_out.end(), node) != checked_out.end()) {
            return;
        }
        if (id.value >= n_blocks_) {
            throw InvariantError("tree holds unknown block " + std::to_string(id.value));
        }
        if (seen[id.value]) {
            throw InvariantError("block " + std::to_string(id.value) + " stored twice in the tree");
        }
        seen[id.value] = 1;
        const auto level = static_cast<std::uint32_t>(std::bit_width(node) - 1);
        const auto leaf_node = geo.num_leaves() + positions_.lookup(id).value;
        if ((leaf_node >> (geo.height - level)) != node) {
            throw InvariantError("block " + std::to_string(id.value) + " sits in node " +
                                 std::to_string(node) + ", off its path to leaf " +
                                 std::to_string(positions_.lookup(id).value));
        }
    });
    for (const auto &[key, block] : stash_) {
        if (key >= n_blocks_) {
            throw InvariantError("stash holds unknown block " + std::to_string(key));
        }
        if (seen[key]) {
            throw InvariantError("block " + std::to_string(key) + " both in tree and stash");
        }
        seen[key] = 1;
    }
    for (std::uint64_t i = 0; i < n_blocks_; ++i) {
        if (!seen[i]) {
            throw InvariantError("block " + std::to_string(i) + " has no home");
        }
    }
    if (stash_.peak() < stash_.occupancy()) {
        throw InvariantError("stash peak below current occupancy");
    }
}

Counters Engine::counters() const {
    Counters c;
    c.real_accesses = real_accesses_;
    c.real_path_reads = real_path_reads_;
    c.dummy_reads = dummy_reads_;
    c.blocks_transferred = tree_.transfers().slots_read;
    c.block_size = geometry().block_size;
    c.stash_peak = stash_.peak();
    c.stash_timeline = timeline_;
    return c;
}

} // namespace laoram
