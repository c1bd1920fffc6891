#include "laoram/traces.hpp"

#include "laoram/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace laoram {

AccessTrace permutation_trace(std::uint64_t n_blocks, std::uint64_t epochs, std::uint64_t seed) {
    if (n_blocks == 0 || epochs == 0) {
        throw ConfigError("permutation trace needs at least one block and one epoch");
    }
    AccessTrace trace;
    trace.source = TraceSource::permutation;
    trace.n_blocks = n_blocks;
    trace.entries.reserve(n_blocks * epochs);
    std::mt19937_64 rng(seed);
    std::vector<BlockId> order(n_blocks);
    for (std::uint64_t e = 0; e < epochs; ++e) {
        for (std::uint64_t i = 0; i < n_blocks; ++i) {
            order[i] = BlockId{i};
        }
        std::shuffle(order.begin(), order.end(), rng);
        trace.entries.insert(trace.entries.end(), order.begin(), order.end());
    }
    return trace;
}

AccessTrace gaussian_trace(std::uint64_t n_blocks, std::uint64_t count, double mean_frac,
                           double stddev_frac, std::uint64_t seed) {
    if (n_blocks == 0) {
        throw ConfigError("gaussian trace needs at least one block");
    }
    if (!(mean_frac >= 0.0 && mean_frac <= 1.0) || !(stddev_frac > 0.0) ||
        !std::isfinite(stddev_frac)) {
        throw ConfigError("gaussian trace needs mean_frac in [0, 1] and a positive deviation");
    }
    AccessTrace trace;
    trace.source = TraceSource::gaussian;
    trace.n_blocks = n_blocks;
    trace.entries.reserve(count);
    std::mt19937_64 rng(seed);
    const double n = static_cast<double>(n_blocks);
    std::normal_distribution<double> dist(mean_frac * n, stddev_frac * n);
    for (std::uint64_t i = 0; i < count; ++i) {
        int rejections = 0;
        for (;;) {
            const double v = std::round(dist(rng));
            if (v >= 0.0 && v < n) {
                trace.entries.push_back(BlockId{static_cast<std::uint64_t>(v)});
                break;
            }
            if (++rejections > 1000) {
                throw ConfigError("gaussian parameters put almost no mass inside [0, N)");
            }
        }
    }
    return trace;
}

AccessTrace grouped_trace(std::uint64_t n_blocks, std::uint64_t group_size, std::uint64_t epochs,
                          std::uint64_t seed) {
    if (group_size == 0 || n_blocks == 0 || n_blocks % group_size != 0) {
        throw ConfigError("grouped trace needs a group size dividing the block count");
    }
    AccessTrace trace;
    trace.source = TraceSource::grouped;
    trace.n_blocks = n_blocks;
    trace.entries.reserve(n_blocks * epochs);
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> groups(n_blocks / group_size);
    std::vector<BlockId> members(group_size);
    for (std::uint64_t e = 0; e < epochs; ++e) {
        std::iota(groups.begin(), groups.end(), std::uint64_t{0});
        std::shuffle(groups.begin(), groups.end(), rng);
        for (auto g : groups) {
            for (std::uint64_t i = 0; i < group_size; ++i) {
                members[i] = BlockId{g * group_size + i};
            }
            std::shuffle(members.begin(), members.end(), rng);
            trace.entries.insert(trace.entries.end(), members.begin(), members.end());
        }
    }
    return trace;
}

AccessTrace parse_trace(const std::string &text, std::uint64_t n_blocks) {
    AccessTrace trace;
    trace.source = TraceSource::file;
    trace.n_blocks = n_blocks;
    std::istringstream in(text);
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        const std::string_view field(line.data() + first, last - first + 1);
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec == std::errc::result_out_of_range) {
            throw TraceRangeError(line_no, "block id '" + std::string(field) + "' is out of range");
        }
        if (ec != std::errc() || ptr != field.data() + field.size()) {
            throw ParseError(line_no, "expected a block id, got '" + std::string(field) + "'");
        }
        if (v >= n_blocks) {
            throw TraceRangeError(line_no, "block id " + std::to_string(v) + " outside [0, " +
                                               std::to_string(n_blocks) + ")");
        }
        trace.entries.push_back(BlockId{v});
    }
    return trace;
}

AccessTrace load_trace(const std::filesystem::path &path, std::uint64_t n_blocks) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open trace file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace(buf.str(), n_blocks);
}

std::string to_string(TraceSource source) {
    switch (source) {
    case TraceSource::permutation:
        return "permutation";
    case TraceSource::gaussian:
        return "gaussian";
    case TraceSource::grouped:
        return "grouped";
    case TraceSource::file:
        return "file";
    }
    return "unknown";
}

} // namespace laoram
