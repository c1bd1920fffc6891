#include "laoram/tree_store.hpp"

#include "laoram/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace laoram {

namespace {

constexpr std::uint8_t kMagic[4] = {'L', 'A', 'O', 'R'};
constexpr std::uint32_t kSnapshotVersion = 1;

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u64(std::vector<std::uint8_t> &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t get(std::size_t width) {
        if (pos_ + width > bytes_.size()) {
            throw ConfigError("snapshot truncated at byte " + std::to_string(pos_));
        }
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) {
            v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
        }
        pos_ += width;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw ConfigError("snapshot truncated at byte " + std::to_string(pos_));
        }
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void check_leaf(LeafId leaf, const TreeGeometry &geometry) {
    if (leaf.value >= geometry.num_leaves()) {
        throw RangeError("leaf " + std::to_string(leaf.value) + " outside [0, " +
                         std::to_string(geometry.num_leaves()) + ")");
    }
}

} // namespace

BucketSchedule::BucketSchedule(std::vector<std::uint32_t> sizes_by_level)
    : sizes_(std::move(sizes_by_level)) {
    if (sizes_.empty()) {
        throw ConfigError("bucket schedule needs at least one level");
    }
    for (std::size_t level = 0; level < sizes_.size(); ++level) {
        if (sizes_[level] == 0) {
            throw ConfigError("bucket size at level " + std::to_string(level) + " is zero");
        }
        if (level > 0 && sizes_[level] > sizes_[level - 1]) {
            throw ConfigError("bucket schedule grows toward the leaves at level " +
                              std::to_string(level) + " (" + std::to_string(sizes_[level - 1]) +
                              " -> " + std::to_string(sizes_[level]) + ")");
        }
    }
}

BucketSchedule BucketSchedule::uniform(std::uint32_t height, std::uint32_t z) {
    return BucketSchedule(std::vector<std::uint32_t>(height + 1, z));
}

BucketSchedule BucketSchedule::linear(std::uint32_t height, std::uint32_t root_size,
                                      std::uint32_t leaf_size) {
    if (height == 0) {
        return BucketSchedule({std::max(root_size, leaf_size)});
    }
    std::vector<std::uint32_t> sizes(height + 1);
    for (std::uint32_t level = 0; level <= height; ++level) {
        const double t = static_cast<double>(level) / height;
        const double v = root_size + (static_cast<double>(leaf_size) - root_size) * t;
        sizes[level] = static_cast<std::uint32_t>(std::lround(v));
    }
    return BucketSchedule(std::move(sizes));
}

BucketSchedule BucketSchedule::step(std::uint32_t height, std::uint32_t internal_size,
                                    std::uint32_t leaf_size) {
    std::vector<std::uint32_t> sizes(height + 1, internal_size);
    sizes.back() = leaf_size;
    return BucketSchedule(std::move(sizes));
}

bool BucketSchedule::is_uniform() const noexcept {
    return std::adjacent_find(sizes_.begin(), sizes_.end(), std::not_equal_to<>()) ==
           sizes_.end();
}

std::uint64_t BucketSchedule::path_slots() const noexcept {
    std::uint64_t total = 0;
    for (auto z : sizes_) {
        total += z;
    }
    return total;
}

TreeGeometry::TreeGeometry(std::uint32_t height_, BucketSchedule schedule_,
                           std::uint64_t block_size_)
    : height(height_), schedule(std::move(schedule_)), block_size(block_size_) {
    if (height >= 48) {
        throw ConfigError("tree height " + std::to_string(height) + " is unreasonably large");
    }
    if (schedule.levels() != std::size_t{height} + 1) {
        throw ConfigError("schedule has " + std::to_string(schedule.levels()) +
                          " levels, tree of height " + std::to_string(height) + " needs " +
                          std::to_string(height + 1));
    }
    if (block_size == 0) {
        throw ConfigError("block_size must be positive");
    }
}

std::uint64_t TreeGeometry::total_slots() const noexcept {
    std::uint64_t total = 0;
    for (std::uint32_t level = 0; level <= height; ++level) {
        total += (std::uint64_t{1} << level) * schedule.sizes()[level];
    }
    return total;
}

std::vector<std::uint64_t> path_nodes(LeafId leaf, const TreeGeometry &geometry) {
    check_leaf(leaf, geometry);
    std::vector<std::uint64_t> nodes(geometry.height + 1);
    std::uint64_t node = geometry.num_leaves() + leaf.value;
    for (std::uint32_t level = geometry.height + 1; level-- > 0;) {
        nodes[level] = node;
        node >>= 1;
    }
    return nodes;
}

std::uint32_t common_prefix_level(LeafId a, LeafId b, const TreeGeometry &geometry) {
    check_leaf(a, geometry);
    check_leaf(b, geometry);
    const auto diverging_bits = static_cast<std::uint32_t>(std::bit_width(a.value ^ b.value));
    return geometry.height - diverging_bits;
}

std::uint64_t storage_bytes(const TreeGeometry &geometry) {
    return geometry.total_slots() * geometry.block_size;
}

std::size_t Bucket::real_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](const auto &s) { return s.has_value(); }));
}

TreeStore::TreeStore(TreeGeometry geometry) : geometry_(std::move(geometry)), initialized_(true) {
    level_first_slot_.resize(geometry_.height + 2);
    std::uint64_t first = 0;
    for (std::uint32_t level = 0; level <= geometry_.height; ++level) {
        level_first_slot_[level] = first;
        first += (std::uint64_t{1} << level) * geometry_.schedule.at(level);
    }
    level_first_slot_[geometry_.height + 1] = first;
    ids_.assign(first, kDummyId);
    payloads_.assign(first * geometry_.block_size, 0);
}

void TreeStore::require_initialized() const {
    if (!initialized_) {
        throw StateError("tree store used before initialisation");
    }
}

TreeStore::SlotRange TreeStore::slot_range(std::uint64_t node) const {
    const auto level = static_cast<std::uint32_t>(std::bit_width(node) - 1);
    const std::uint64_t z = geometry_.schedule.at(level);
    const std::uint64_t offset = node - (std::uint64_t{1} << level);
    return {level_first_slot_[level] + offset * z, z};
}

std::vector<Bucket> TreeStore::read_path(LeafId leaf) {
    require_initialized();
    const auto nodes = path_nodes(leaf, geometry_);
    std::vector<Bucket> buckets(nodes.size());
    const auto bs = geometry_.block_size;
    for (std::uint32_t level = 0; level < nodes.size(); ++level) {
        const auto [first, count] = slot_range(nodes[level]);
        auto &bucket = buckets[level];
        bucket.level = level;
        bucket.slots.resize(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto s = first + i;
            if (ids_[s] != kDummyId) {
                const auto *p = payloads_.data() + s * bs;
                bucket.slots[i] = Block{BlockId{ids_[s]}, std::vector<std::uint8_t>(p, p + bs)};
            }
        }
        transfers_.slots_read += count;
    }
    ++transfers_.paths_read;
    return buckets;
}

void TreeStore::write_path(LeafId leaf, std::span<const Bucket> buckets) {
    require_initialized();
    const auto nodes = path_nodes(leaf, geometry_);
    if (buckets.size() != nodes.size()) {
        throw InvariantError("write_path expects " + std::to_string(nodes.size()) +
                             " buckets, got " + std::to_string(buckets.size()));
    }
    for (std::uint32_t level = 0; level < nodes.size(); ++level) {
        const auto &bucket = buckets[level];
        const auto z = geometry_.schedule.at(level);
        if (bucket.level != level) {
            throw InvariantError("bucket for level " + std::to_string(level) + " claims level " +
                                 std::to_string(bucket.level));
        }
        if (bucket.slots.size() != z) {
            throw InvariantError("bucket at level " + std::to_string(level) + " has " +
                                 std::to_string(bucket.slots.size()) + " slots, capacity is " +
                                 std::to_string(z));
        }
        for (const auto &slot : bucket.slots) {
            if (slot && slot->payload.size() != geometry_.block_size) {
                throw InvariantError("block " + std::to_string(slot->id.value) + " payload is " +
                                     std::to_string(slot->payload.size()) + " bytes, expected " +
                                     std::to_string(geometry_.block_size));
            }
            if (slot && slot->id.value == kDummyId) {
                throw InvariantError("block id collides with the dummy marker");
            }
        }
    }

    const auto bs = geometry_.block_size;
    for (std::uint32_t level = 0; level < nodes.size(); ++level) {
        const auto [first, count] = slot_range(nodes[level]);
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto s = first + i;
            const auto &slot = buckets[level].slots[i];
            if (ids_[s] != kDummyId) {
                --real_blocks_;
            }
            auto *p = payloads_.data() + s * bs;
            if (slot) {
                ids_[s] = slot->id.value;
                std::memcpy(p, slot->payload.data(), bs);
                ++real_blocks_;
            } else {
                ids_[s] = kDummyId;
                std::memset(p, 0, bs);
            }
        }
        transfers_.slots_written += count;
    }
    ++transfers_.paths_written;
}

bool TreeStore::try_place(std::uint64_t node, const Block &block) {
    require_initialized();
    if (node == 0 || node > geometry_.num_nodes()) {
        throw RangeError("node " + std::to_string(node) + " outside the tree");
    }
    if (block.payload.size() != geometry_.block_size) {
        throw InvariantError("payload size mismatch on bulk placement");
    }
    const auto [first, count] = slot_range(node);
    for (std::uint64_t s = first; s < first + count; ++s) {
        if (ids_[s] == kDummyId) {
            ids_[s] = block.id.value;
            std::memcpy(payloads_.data() + s * geometry_.block_size, block.payload.data(),
                        geometry_.block_size);
            ++real_blocks_;
            return true;
        }
    }
    return false;
}

std::vector<std::uint8_t> TreeStore::snapshot() const {
    require_initialized();
    const auto bs = geometry_.block_size;
    if (bs > UINT32_MAX) {
        throw ConfigError("block_size does not fit the snapshot header");
    }
    std::vector<std::uint8_t> out;
    out.reserve(16 + 4 * geometry_.schedule.levels() + ids_.size() * (9 + bs));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kSnapshotVersion);
    put_u32(out, geometry_.height);
    put_u32(out, static_cast<std::uint32_t>(bs));
    for (auto z : geometry_.schedule.sizes()) {
        put_u32(out, z);
    }
    for (std::uint64_t s = 0; s < ids_.size(); ++s) {
        const bool real = ids_[s] != kDummyId;
        out.push_back(real ? 1 : 0);
        put_u64(out, real ? ids_[s] : 0);
        const auto *p = payloads_.data() + s * bs;
        out.insert(out.end(), p, p + bs);
    }
    return out;
}

TreeStore TreeStore::from_snapshot(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    const auto magic = in.take(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
        throw ConfigError("snapshot magic mismatch");
    }
    const auto version = in.get(4);
    if (version != kSnapshotVersion) {
        throw ConfigError("unsupported snapshot version " + std::to_string(version));
    }
    const auto height = static_cast<std::uint32_t>(in.get(4));
    const auto block_size = in.get(4);
    if (height >= 48) {
        throw ConfigError("snapshot height out of range");
    }
    std::vector<std::uint32_t> sizes(height + 1);
    for (auto &z : sizes) {
        z = static_cast<std::uint32_t>(in.get(4));
    }
    TreeStore store(TreeGeometry(height, BucketSchedule(std::move(sizes)), block_size));
    for (std::uint64_t s = 0; s < store.ids_.size(); ++s) {
        const auto flag = in.get(1);
        const auto id = in.get(8);
        const auto payload = in.take(block_size);
        if (flag > 1) {
            throw ConfigError("bad slot flag in snapshot");
        }
        if (flag == 1) {
            store.ids_[s] = id;
            std::copy(payload.begin(), payload.end(),
                      store.payloads_.begin() + static_cast<std::ptrdiff_t>(s * block_size));
            ++store.real_blocks_;
        }
    }
    if (!in.done()) {
        throw ConfigError("trailing bytes after snapshot");
    }
    return store;
}

} // namespace laoram
