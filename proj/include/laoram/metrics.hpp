#pragma once

#include "laoram/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace laoram {

enum class FetchKind : std::uint8_t { real = 0, dummy = 1 };

/// One observable path fetch, as the server sees it.
struct FetchRecord {
    std::uint64_t step = 0;  // index of the client request being served
    LeafId leaf;
    FetchKind kind = FetchKind::real;

    friend bool operator==(const FetchRecord &, const FetchRecord &) = default;
};

struct StashSample {
    std::uint64_t step = 0;
    std::uint64_t occupancy = 0;

    friend bool operator==(const StashSample &, const StashSample &) = default;
};

struct Counters {
    std::uint64_t real_accesses = 0;
    std::uint64_t real_path_reads = 0;
    std::uint64_t dummy_reads = 0;
    /// Slots moved server -> client by path fetches, dummies included.
    std::uint64_t blocks_transferred = 0;
    std::uint64_t block_size = 0;
    std::uint64_t stash_peak = 0;
    std::vector<StashSample> stash_timeline;

    std::uint64_t bytes_transferred() const noexcept { return blocks_transferred * block_size; }
};

/// dummy_reads / real_accesses. Throws PreconditionError with no accesses.
double dummy_read_ratio(const Counters &counters);

/// baseline.blocks_transferred / candidate.blocks_transferred; both runs must
/// have served the same number of requests.
double traffic_reduction(const Counters &baseline, const Counters &candidate);

struct TheoreticalBounds {
    double normal_bound;
    double fat_bound;
    double fat_per_access_factor;
};

/// Upper bounds on traffic reduction against PathORAM for bucket size z and
/// superblock size s: s for the normal tree, 2(z+1)/(3z+1)*s for the fat tree.
TheoreticalBounds theoretical_bounds(std::uint32_t z, std::uint32_t s);

struct ChiSquareResult {
    double statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
};

/// Regularised lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularised upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);
/// Survival function of the chi-square distribution with `dof` degrees of freedom.
double chi_square_survival(double statistic, double dof);

/// Pearson goodness-of-fit against the uniform distribution over the cells.
/// Needs >= 2 cells and >= 5 draws per cell on average.
ChiSquareResult chi_square_uniformity(std::span<const std::uint64_t> histogram);

/// Two-sample chi-square homogeneity test on the leaf histograms of two
/// equal-length fetch logs.
ChiSquareResult two_sample_leaf_test(std::span<const FetchRecord> log_a,
                                     std::span<const FetchRecord> log_b);

/// Leaf histogram of a fetch log folded into `cells` contiguous leaf ranges.
/// `cells` must be a power of two dividing num_leaves.
std::vector<std::uint64_t> leaf_histogram(std::span<const FetchRecord> log,
                                          std::uint64_t num_leaves, std::uint64_t cells);

} // namespace laoram
