#pragma once

#include "laoram/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace laoram {

enum class TraceSource { permutation, gaussian, grouped, file };

struct AccessTrace {
    std::vector<BlockId> entries;
    TraceSource source = TraceSource::permutation;
    std::uint64_t n_blocks = 0;
};

/// `epochs` independent uniform shuffles of [0, n_blocks), concatenated.
AccessTrace permutation_trace(std::uint64_t n_blocks, std::uint64_t epochs, std::uint64_t seed);

/// `count` draws of round(Normal(mean_frac*N, stddev_frac*N)), redrawn until
/// they land in [0, N). Throws ConfigError after 1000 consecutive rejections.
AccessTrace gaussian_trace(std::uint64_t n_blocks, std::uint64_t count, double mean_frac,
                           double stddev_frac, std::uint64_t seed);

/// Fixed groups {kG, ..., kG+G-1}; every epoch visits all groups in a fresh
/// random order, members of a group back to back in random order. With
/// G == S every superblock bin is exactly one group.
AccessTrace grouped_trace(std::uint64_t n_blocks, std::uint64_t group_size, std::uint64_t epochs,
                          std::uint64_t seed);

/// One decimal block id per line; blank lines and lines starting with '#'
/// are skipped. Throws ParseError / TraceRangeError carrying the line number.
AccessTrace load_trace(const std::filesystem::path &path, std::uint64_t n_blocks);
AccessTrace parse_trace(const std::string &text, std::uint64_t n_blocks);

std::string to_string(TraceSource source);

} // namespace laoram
