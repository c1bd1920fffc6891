#include "laoram/errors.hpp"
#include "laoram/metrics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace laoram;

TEST(DummyReadRatio, Examples) {
    Counters c;
    c.real_accesses = 100;
    c.dummy_reads = 57;
    EXPECT_DOUBLE_EQ(dummy_read_ratio(c), 0.57);
    c.dummy_reads = 0;
    EXPECT_EQ(dummy_read_ratio(c), 0.0);
    c.dummy_reads = 100;
    EXPECT_EQ(dummy_read_ratio(c), 1.0);
    c.real_accesses = 0;
    EXPECT_THROW(dummy_read_ratio(c), PreconditionError);
}

TEST(TrafficReduction, Examples) {
    Counters base, cand;
    base.real_accesses = cand.real_accesses = 10;
    base.blocks_transferred = 400;
    cand.blocks_transferred = 400;
    EXPECT_EQ(traffic_reduction(base, cand), 1.0);
    cand.blocks_transferred = 200;
    EXPECT_EQ(traffic_reduction(base, cand), 2.0);
    cand.real_accesses = 11;
    EXPECT_THROW(traffic_reduction(base, cand), PreconditionError);
}

TEST(TheoreticalBounds, Formulas) {
    const auto b = theoretical_bounds(4, 8);
    EXPECT_EQ(b.normal_bound, 8.0);
    EXPECT_NEAR(b.fat_bound, 80.0 / 13.0, 1e-12);
    EXPECT_NEAR(b.fat_per_access_factor, 1.3, 1e-12);
    for (std::uint32_t z = 1; z <= 8; ++z) {
        EXPECT_EQ(theoretical_bounds(z, 1).normal_bound, 1.0);
        const auto t = theoretical_bounds(z, 4);
        EXPECT_NEAR(t.fat_bound * t.fat_per_access_factor, 4.0, 1e-12);
    }
    EXPECT_THROW(theoretical_bounds(0, 4), PreconditionError);
}

// Our incomplete gamma against Boost's, across both sides of the
// series / continued-fraction switch at x = a + 1.
TEST(IncompleteGamma, MatchesIndependentImplementation) {
    for (double a : {0.5, 1.0, 2.5, 7.0, 50.0, 511.5, 4095.5}) {
        for (double f : {0.01, 0.3, 0.9, 0.999, 1.0, 1.001, 1.2, 2.0, 5.0}) {
            const double x = a * f;
            const double p = boost::math::gamma_p(a, x);
            const double q = boost::math::gamma_q(a, x);
            EXPECT_NEAR(regularized_gamma_p(a, x), p, 1e-8 * std::max(p, 1e-300) + 1e-15)
                << "a=" << a << " x=" << x;
            EXPECT_NEAR(regularized_gamma_q(a, x), q, 1e-8 * std::max(q, 1e-300) + 1e-15)
                << "a=" << a << " x=" << x;
        }
    }
    EXPECT_EQ(regularized_gamma_p(3.0, 0.0), 0.0);
    EXPECT_EQ(regularized_gamma_q(3.0, 0.0), 1.0);
    EXPECT_THROW(regularized_gamma_p(0.0, 1.0), PreconditionError);
}

TEST(ChiSquareSurvival, TabulatedCriticalValues) {
    EXPECT_NEAR(chi_square_survival(3.841458820694124, 1), 0.05, 1e-10);
    EXPECT_NEAR(chi_square_survival(6.634896601021214, 1), 0.01, 1e-10);
    EXPECT_NEAR(chi_square_survival(18.307038053275146, 10), 0.05, 1e-10);
    for (double dof : {1.0, 3.0, 15.0, 255.0, 1023.0, 8191.0}) {
        boost::math::chi_squared dist(dof);
        for (double p : {0.5, 0.05, 0.01, 1e-6}) {
            const double crit = boost::math::quantile(boost::math::complement(dist, p));
            EXPECT_NEAR(chi_square_survival(crit, dof), p, 1e-8 * p) << "dof=" << dof;
        }
    }
}

TEST(ChiSquareUniformity, Examples) {
    const std::vector<std::uint64_t> flat(8, 10);
    const auto equal = chi_square_uniformity(flat);
    EXPECT_EQ(equal.statistic, 0.0);
    EXPECT_EQ(equal.p_value, 1.0);
    EXPECT_EQ(equal.degrees_of_freedom, 7.0);

    const std::vector<std::uint64_t> spike{1000, 0, 0, 0};
    const auto r = chi_square_uniformity(spike);
    EXPECT_DOUBLE_EQ(r.statistic, 3000.0);
    EXPECT_LT(r.p_value, 1e-100);

    EXPECT_THROW(chi_square_uniformity(std::vector<std::uint64_t>{10}), PreconditionError);
    EXPECT_THROW(chi_square_uniformity(std::vector<std::uint64_t>{4, 4, 4}), PreconditionError);
}

TEST(ChiSquareUniformity, CalibratedOnUniformDraws) {
    // 10^5 uniform draws over 2^8 leaves; a correct harness rejects at the
    // 1% level about 1% of the time.
    int passes = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::mt19937_64 rng(1000 + rep);
        std::uniform_int_distribution<int> dist(0, 255);
        std::vector<std::uint64_t> hist(256, 0);
        for (int i = 0; i < 100000; ++i) {
            ++hist[dist(rng)];
        }
        passes += chi_square_uniformity(hist).p_value > 0.01 ? 1 : 0;
    }
    EXPECT_GE(passes, 95);
}

TEST(TwoSampleLeafTest, Examples) {
    std::vector<FetchRecord> a, b;
    std::mt19937_64 rng(5);
    for (std::uint64_t i = 0; i < 20000; ++i) {
        a.push_back({i, LeafId{rng() % 64}, FetchKind::real});
        b.push_back({i, LeafId{rng() % 64}, FetchKind::real});
    }
    EXPECT_EQ(two_sample_leaf_test(a, a).p_value, 1.0);
    EXPECT_GT(two_sample_leaf_test(a, b).p_value, 0.001);

    std::vector<FetchRecord> skewed = b;
    for (std::size_t i = 0; i < skewed.size(); i += 3) {
        skewed[i].leaf = LeafId{0};
    }
    EXPECT_LT(two_sample_leaf_test(a, skewed).p_value, 1e-6);

    b.pop_back();
    EXPECT_THROW(two_sample_leaf_test(a, b), PreconditionError);
}

TEST(LeafHistogram, FoldsIntoCells) {
    std::vector<FetchRecord> log;
    for (std::uint64_t leaf = 0; leaf < 16; ++leaf) {
        log.push_back({0, LeafId{leaf}, FetchKind::dummy});
    }
    EXPECT_EQ(leaf_histogram(log, 16, 4), (std::vector<std::uint64_t>{4, 4, 4, 4}));
    EXPECT_EQ(leaf_histogram(log, 16, 16), std::vector<std::uint64_t>(16, 1));
    EXPECT_THROW(leaf_histogram(log, 16, 3), PreconditionError);
    log.push_back({0, LeafId{16}, FetchKind::real});
    EXPECT_THROW(leaf_histogram(log, 16, 4), RangeError);
}
