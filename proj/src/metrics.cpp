#include "laoram/metrics.hpp"

#include "laoram/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace laoram {

double dummy_read_ratio(const Counters &counters) {
    if (counters.real_accesses == 0) {
        throw PreconditionError("dummy-read ratio undefined without real accesses");
    }
    return static_cast<double>(counters.dummy_reads) /
           static_cast<double>(counters.real_accesses);
}

double traffic_reduction(const Counters &baseline, const Counters &candidate) {
    if (baseline.real_accesses != candidate.real_accesses) {
        throw PreconditionError("traffic comparison across different request counts (" +
                                std::to_string(baseline.real_accesses) + " vs " +
                                std::to_string(candidate.real_accesses) + ")");
    }
    if (candidate.blocks_transferred == 0) {
        throw PreconditionError("candidate transferred no blocks");
    }
    return static_cast<double>(baseline.blocks_transferred) /
           static_cast<double>(candidate.blocks_transferred);
}

TheoreticalBounds theoretical_bounds(std::uint32_t z, std::uint32_t s) {
    if (z == 0 || s == 0) {
        throw PreconditionError("bucket and superblock sizes must be positive");
    }
    const double zd = z;
    const double per_access = (3.0 * zd + 1.0) / (2.0 * (zd + 1.0));
    return {static_cast<double>(s), 2.0 * (zd + 1.0) / (3.0 * zd + 1.0) * s, per_access};
}

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kEpsilon = 1e-15;

// Series expansion of P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIterations; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEpsilon) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / kEpsilon;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEpsilon) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw PreconditionError("incomplete gamma needs a > 0 and x >= 0");
    }
}

} // namespace

double regularized_gamma_p(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) {
        return 0.0;
    }
    return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) {
        return 1.0;
    }
    return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_continued_fraction(a, x);
}

double chi_square_survival(double statistic, double dof) {
    if (!(dof > 0.0)) {
        throw PreconditionError("chi-square needs positive degrees of freedom");
    }
    if (statistic <= 0.0) {
        return 1.0;
    }
    return regularized_gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_uniformity(std::span<const std::uint64_t> histogram) {
    const auto k = histogram.size();
    if (k < 2) {
        throw PreconditionError("uniformity test needs at least two cells");
    }
    std::uint64_t total = 0;
    for (auto c : histogram) {
        total += c;
    }
    if (total < 5 * k) {
        throw PreconditionError("uniformity test needs >= 5 draws per cell (" +
                                std::to_string(total) + " draws, " + std::to_string(k) +
                                " cells)");
    }
    const double expected = static_cast<double>(total) / static_cast<double>(k);
    double statistic = 0.0;
    for (auto c : histogram) {
        const double diff = static_cast<double>(c) - expected;
        statistic += diff * diff / expected;
    }
    const double dof = static_cast<double>(k - 1);
    return {statistic, dof, chi_square_survival(statistic, dof)};
}

ChiSquareResult two_sample_leaf_test(std::span<const FetchRecord> log_a,
                                     std::span<const FetchRecord> log_b) {
    if (log_a.size() != log_b.size()) {
        throw PreconditionError("two-sample test needs equal-length logs (" +
                                std::to_string(log_a.size()) + " vs " +
                                std::to_string(log_b.size()) + ")");
    }
    if (log_a.empty()) {
        throw PreconditionError("two-sample test on empty logs");
    }
    std::unordered_map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> cells;
    for (const auto &r : log_a) {
        ++cells[r.leaf.value].first;
    }
    for (const auto &r : log_b) {
        ++cells[r.leaf.value].second;
    }
    // Equal totals: sum (a - b)^2 / (a + b) over occupied cells, dof = cells - 1.
    double statistic = 0.0;
    for (const auto &[leaf, ab] : cells) {
        const double a = static_cast<double>(ab.first);
        const double b = static_cast<double>(ab.second);
        statistic += (a - b) * (a - b) / (a + b);
    }
    if (cells.size() < 2) {
        return {statistic, 0.0, 1.0};
    }
    const double dof = static_cast<double>(cells.size() - 1);
    return {statistic, dof, chi_square_survival(statistic, dof)};
}

std::vector<std::uint64_t> leaf_histogram(std::span<const FetchRecord> log,
                                          std::uint64_t num_leaves, std::uint64_t cells) {
    if (cells == 0 || num_leaves % cells != 0 || (cells & (cells - 1)) != 0) {
        throw PreconditionError("cell count must be a power of two dividing the leaf count");
    }
    const std::uint64_t width = num_leaves / cells;
    std::vector<std::uint64_t> hist(cells, 0);
    for (const auto &r : log) {
        if (r.leaf.value >= num_leaves) {
            throw RangeError("logged leaf outside the tree");
        }
        ++hist[r.leaf.value / width];
    }
    return hist;
}

} // namespace laoram
