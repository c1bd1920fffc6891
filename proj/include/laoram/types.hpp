#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <random>

namespace laoram {

/// Logical block (embedding entry) index, dense in [0, n_blocks).
struct BlockId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(BlockId, BlockId) = default;
};

/// Leaf / path number, dense in [0, num_leaves).
struct LeafId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(LeafId, LeafId) = default;
};

/// A named, independently seeded stream of uniform leaf draws.
///
/// Every source of randomness in the simulator is one of these so that runs
/// are reproducible and the draws of one stream can be counted (and replayed)
/// without perturbing another.
class LeafStream {
public:
    explicit LeafStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw over [0, num_leaves). num_leaves must be >= 1.
    LeafId draw(std::uint64_t num_leaves) {
        ++draws_;
        std::uniform_int_distribution<std::uint64_t> dist(0, num_leaves - 1);
        return LeafId{dist(engine_)};
    }

    std::uint64_t draws() const noexcept { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

} // namespace laoram

template <>
struct std::hash<laoram::BlockId> {
    std::size_t operator()(laoram::BlockId id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
