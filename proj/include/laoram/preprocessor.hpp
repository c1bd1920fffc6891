#pragma once

#include "laoram/channel.hpp"
#include "laoram/client.hpp"
#include "laoram/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace laoram {

struct ScanConfig {
    std::uint32_t superblock_size = 1;
    /// Trace entries per look-ahead batch; 0 scans the whole trace as one batch.
    std::uint64_t window = 0;

    void validate() const;
};

/// A closed superblock bin and the number of trace entries it covered.
struct ScanBin {
    std::vector<BlockId> members;
    std::uint64_t span = 0;

    friend bool operator==(const ScanBin &, const ScanBin &) = default;
};

/// Streaming form of the dataset scan: one open bin, entries already in it
/// are skipped, the bin closes at S members or at a window boundary.
class BinScanner {
public:
    explicit BinScanner(ScanConfig config);

    /// Feeds one trace entry; returns the bin it closed, if any.
    std::optional<ScanBin> feed(BlockId id);
    /// Closes the open bin (possibly short). Empty bins are not emitted.
    std::optional<ScanBin> flush();

private:
    ScanConfig config_;
    ScanBin open_;
    std::uint64_t in_window_ = 0;
};

std::vector<ScanBin> scan(std::span<const BlockId> trace, const ScanConfig &config);

/// Gives each bin one uniform leaf from `plan_stream`; sequence numbers
/// continue from `first_sequence`.
std::vector<SuperblockPlan> assign_paths(std::span<const ScanBin> bins, std::uint64_t num_leaves,
                                         LeafStream &plan_stream,
                                         std::uint64_t first_sequence = 0);

using PlanChannel = BoundedChannel<SuperblockPlan>;

/// Producer side of the two-stage pipeline: scans `trace`, pushes each plan as
/// soon as its bin closes, and closes the channel at the end. Returns the
/// number of plans delivered; stops early if the consumer closed the channel.
std::uint64_t pipeline_feed(std::span<const BlockId> trace, const ScanConfig &config,
                            std::uint64_t num_leaves, LeafStream &plan_stream,
                            PlanChannel &channel);

/// Debug text form, one plan per line: `seq,member;member;...,leaf`.
std::string format_plans(std::span<const SuperblockPlan> plans);
std::vector<SuperblockPlan> parse_plans(const std::string &text);

} // namespace laoram
