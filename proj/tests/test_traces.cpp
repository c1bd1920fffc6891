#include "laoram/errors.hpp"
#include "laoram/traces.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace laoram;

namespace {

std::vector<std::uint64_t> values(const AccessTrace &t) {
    std::vector<std::uint64_t> out;
    for (auto id : t.entries) {
        out.push_back(id.value);
    }
    return out;
}

bool is_permutation_of_range(std::vector<std::uint64_t> v, std::uint64_t n) {
    std::sort(v.begin(), v.end());
    for (std::uint64_t i = 0; i < n; ++i) {
        if (v.size() != n || v[i] != i) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST(PermutationTrace, SingleEpoch) {
    const auto t = permutation_trace(4, 1, 9);
    EXPECT_EQ(t.source, TraceSource::permutation);
    EXPECT_EQ(t.n_blocks, 4u);
    EXPECT_TRUE(is_permutation_of_range(values(t), 4));
}

TEST(PermutationTrace, EpochsAreIndependentPermutations) {
    const auto t = permutation_trace(4, 2, 9);
    const auto v = values(t);
    ASSERT_EQ(v.size(), 8u);
    EXPECT_TRUE(is_permutation_of_range({v.begin(), v.begin() + 4}, 4));
    EXPECT_TRUE(is_permutation_of_range({v.begin() + 4, v.end()}, 4));
    EXPECT_EQ(values(permutation_trace(1000, 2, 3)), values(permutation_trace(1000, 2, 3)));
    EXPECT_NE(values(permutation_trace(1000, 1, 3)), values(permutation_trace(1000, 1, 4)));
    EXPECT_THROW(permutation_trace(0, 1, 1), ConfigError);
    EXPECT_THROW(permutation_trace(4, 0, 1), ConfigError);
}

TEST(GaussianTrace, TinyDeviationCollapsesToTheMean) {
    const auto t = gaussian_trace(1000, 200, 0.5, 1e-9, 1);
    for (auto id : t.entries) {
        EXPECT_EQ(id.value, 500u);
    }
}

TEST(GaussianTrace, SampleMeanWithinThreeStandardErrors) {
    const std::uint64_t n = 10000;
    const std::uint64_t count = 100000;
    const auto t = gaussian_trace(n, count, 0.4, 0.1, 77);
    ASSERT_EQ(t.entries.size(), count);
    double sum = 0;
    for (auto id : t.entries) {
        ASSERT_LT(id.value, n);
        sum += static_cast<double>(id.value);
    }
    const double mean = sum / count;
    // Truncation at [0, N) is 4 sigma away, so the untruncated standard error applies.
    const double se = 0.1 * n / std::sqrt(static_cast<double>(count));
    EXPECT_NEAR(mean, 0.4 * n, 3 * se);
}

TEST(GaussianTrace, ParameterErrors) {
    EXPECT_THROW(gaussian_trace(100, 10, 0.5, 0.0, 1), ConfigError);
    EXPECT_THROW(gaussian_trace(100, 10, 1.5, 0.1, 1), ConfigError);
    // Mean at the upper edge, deviation of one block: about a third of the
    // draws round below N, enough to finish.
    EXPECT_NO_THROW(gaussian_trace(100, 10, 1.0, 0.01, 1));
    // Deviation far below one block around N: every draw rounds to N.
    EXPECT_THROW(gaussian_trace(100, 10, 1.0, 1e-9, 1), ConfigError);
}

TEST(GroupedTrace, GroupsStayTogether) {
    const auto t = grouped_trace(64, 4, 3, 2);
    ASSERT_EQ(t.entries.size(), 192u);
    for (std::size_t i = 0; i < t.entries.size(); i += 4) {
        const auto g = t.entries[i].value / 4;
        std::vector<std::uint64_t> chunk;
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_EQ(t.entries[i + k].value / 4, g);
            chunk.push_back(t.entries[i + k].value - 4 * g);
        }
        EXPECT_TRUE(is_permutation_of_range(chunk, 4));
    }
    EXPECT_THROW(grouped_trace(10, 4, 1, 1), ConfigError);
}

TEST(LoadTrace, ParsesAndReportsLines) {
    const auto t = parse_trace("3\n1\n3\n", 4);
    EXPECT_EQ(values(t), (std::vector<std::uint64_t>{3, 1, 3}));
    EXPECT_EQ(t.source, TraceSource::file);
    EXPECT_TRUE(parse_trace("", 4).entries.empty());
    EXPECT_EQ(values(parse_trace("# header\n\n2\n  1 \n#3\n", 4)),
              (std::vector<std::uint64_t>{2, 1}));

    try {
        parse_trace("1\nabc\n", 4);
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2u);
    }
    try {
        parse_trace("1\n2\n4\n", 4);
        FAIL();
    } catch (const TraceRangeError &e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_trace("-1\n", 4), ParseError);
    EXPECT_THROW(parse_trace("1.5\n", 4), ParseError);
}

TEST(LoadTrace, FromFile) {
    const auto path = std::filesystem::temp_directory_path() / "laoram_trace_test.txt";
    {
        std::ofstream out(path);
        out << "# ids\n0\n7\n";
    }
    EXPECT_EQ(values(load_trace(path, 8)), (std::vector<std::uint64_t>{0, 7}));
    std::filesystem::remove(path);
    EXPECT_THROW(load_trace(path, 8), ConfigError);
}
