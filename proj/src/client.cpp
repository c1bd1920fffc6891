#include "laoram/client.hpp"

#include "laoram/errors.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>
#include <utility>

namespace laoram {

PositionMap::PositionMap(std::uint64_t n_blocks, std::uint64_t num_leaves, LeafStream &stream)
    : num_leaves_(num_leaves) {
    if (num_leaves == 0) {
        throw ConfigError("position map needs at least one leaf");
    }
    leaves_.reserve(n_blocks);
    for (std::uint64_t i = 0; i < n_blocks; ++i) {
        leaves_.push_back(stream.draw(num_leaves));
    }
}

void PositionMap::check_id(BlockId id) const {
    if (id.value >= leaves_.size()) {
        throw RangeError("block " + std::to_string(id.value) + " outside [0, " +
                         std::to_string(leaves_.size()) + ")");
    }
}

LeafId PositionMap::lookup(BlockId id) const {
    check_id(id);
    return leaves_[id.value];
}

LeafId PositionMap::update(BlockId id, LeafId leaf) {
    check_id(id);
    if (leaf.value >= num_leaves_) {
        throw RangeError("leaf " + std::to_string(leaf.value) + " outside [0, " +
                         std::to_string(num_leaves_) + ")");
    }
    return std::exchange(leaves_[id.value], leaf);
}

void Stash::insert(Block block) {
    const auto key = block.id.value;
    auto [it, inserted] = blocks_.try_emplace(key, std::move(block));
    if (!inserted) {
        throw InvariantError("block " + std::to_string(key) + " is already stashed");
    }
    peak_ = std::max<std::uint64_t>(peak_, blocks_.size());
}

std::optional<Block> Stash::take(BlockId id) {
    auto it = blocks_.find(id.value);
    if (it == blocks_.end()) {
        return std::nullopt;
    }
    Block out = std::move(it->second);
    blocks_.erase(it);
    return out;
}

Block *Stash::find(BlockId id) {
    auto it = blocks_.find(id.value);
    return it == blocks_.end() ? nullptr : &it->second;
}

const Block *Stash::find(BlockId id) const {
    auto it = blocks_.find(id.value);
    return it == blocks_.end() ? nullptr : &it->second;
}

bool SuperblockPlan::contains(BlockId id) const {
    return std::find(members.begin(), members.end(), id) != members.end();
}

void PlanQueue::push(SuperblockPlan plan) {
    if (plan.members.empty()) {
        throw InvariantError("superblock plan without members");
    }
    if (last_sequence_ && plan.sequence_number <= *last_sequence_) {
        throw InvariantError("plan sequence " + std::to_string(plan.sequence_number) +
                             " does not follow " + std::to_string(*last_sequence_));
    }
    if (plan.span != 0 && plan.span < plan.members.size()) {
        throw InvariantError("plan span shorter than its member list");
    }
    std::unordered_set<BlockId> seen;
    for (auto m : plan.members) {
        if (!seen.insert(m).second) {
            throw InvariantError("block " + std::to_string(m.value) + " repeated in plan " +
                                 std::to_string(plan.sequence_number));
        }
    }

    const auto seq = plan.sequence_number;
    for (auto m : plan.members) {
        if (auto t = tail_.find(m); t != tail_.end()) {
            auto &prev = plans_.at(t->second);
            const auto idx = static_cast<std::size_t>(
                std::find(prev.plan.members.begin(), prev.plan.members.end(), m) -
                prev.plan.members.begin());
            prev.next_for_member[idx] = seq;
            t->second = seq;
        } else {
            head_[m] = seq;
            tail_[m] = seq;
        }
    }
    Entry entry{std::move(plan), {}};
    entry.next_for_member.resize(entry.plan.members.size());
    plans_.emplace(seq, std::move(entry));
    last_sequence_ = seq;
    ++pushed_;
}

const SuperblockPlan *PlanQueue::next_plan_for(BlockId id) const {
    auto it = head_.find(id);
    if (it == head_.end()) {
        return nullptr;
    }
    return &plans_.at(it->second).plan;
}

const SuperblockPlan *PlanQueue::head() const {
    return plans_.empty() ? nullptr : &plans_.begin()->second.plan;
}

void PlanQueue::consume_plan(const SuperblockPlan &plan) {
    consume_plan(plan.sequence_number);
}

void PlanQueue::consume_plan(std::uint64_t sequence_number) {
    auto it = plans_.find(sequence_number);
    if (it == plans_.end()) {
        throw InvariantError("plan " + std::to_string(sequence_number) + " is not pending");
    }
    const auto &entry = it->second;
    for (auto m : entry.plan.members) {
        auto h = head_.find(m);
        if (h == head_.end() || h->second != sequence_number) {
            throw InvariantError("plan " + std::to_string(sequence_number) +
                                 " consumed out of order for block " + std::to_string(m.value));
        }
    }
    for (std::size_t i = 0; i < entry.plan.members.size(); ++i) {
        const auto m = entry.plan.members[i];
        if (const auto next = entry.next_for_member[i]) {
            head_[m] = *next;
        } else {
            head_.erase(m);
            tail_.erase(m);
        }
    }
    plans_.erase(it);
}

} // namespace laoram
