#include "laoram/preprocessor.hpp"

#include "laoram/errors.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace laoram {

void ScanConfig::validate() const {
    if (superblock_size == 0) {
        throw ConfigError("superblock size must be at least 1");
    }
    if (window != 0 && window < superblock_size) {
        throw ConfigError("look-ahead window (" + std::to_string(window) +
                          ") is smaller than the superblock size (" +
                          std::to_string(superblock_size) + ")");
    }
}

BinScanner::BinScanner(ScanConfig config) : config_(config) { config_.validate(); }

std::optional<ScanBin> BinScanner::feed(BlockId id) {
    ++open_.span;
    if (std::find(open_.members.begin(), open_.members.end(), id) == open_.members.end()) {
        open_.members.push_back(id);
    }
    ++in_window_;
    const bool window_end = config_.window != 0 && in_window_ == config_.window;
    if (window_end) {
        in_window_ = 0;
    }
    if (open_.members.size() == config_.superblock_size || window_end) {
        return std::exchange(open_, ScanBin{});
    }
    return std::nullopt;
}

std::optional<ScanBin> BinScanner::flush() {
    if (open_.members.empty()) {
        return std::nullopt;
    }
    return std::exchange(open_, ScanBin{});
}

std::vector<ScanBin> scan(std::span<const BlockId> trace, const ScanConfig &config) {
    BinScanner scanner(config);
    std::vector<ScanBin> bins;
    for (auto id : trace) {
        if (auto bin = scanner.feed(id)) {
            bins.push_back(std::move(*bin));
        }
    }
    if (auto bin = scanner.flush()) {
        bins.push_back(std::move(*bin));
    }
    return bins;
}

std::vector<SuperblockPlan> assign_paths(std::span<const ScanBin> bins, std::uint64_t num_leaves,
                                         LeafStream &plan_stream, std::uint64_t first_sequence) {
    if (num_leaves == 0) {
        throw ConfigError("cannot assign paths in a tree without leaves");
    }
    std::vector<SuperblockPlan> plans;
    plans.reserve(bins.size());
    std::uint64_t seq = first_sequence;
    for (const auto &bin : bins) {
        plans.push_back({seq++, bin.members, plan_stream.draw(num_leaves), bin.span});
    }
    return plans;
}

std::uint64_t pipeline_feed(std::span<const BlockId> trace, const ScanConfig &config,
                            std::uint64_t num_leaves, LeafStream &plan_stream,
                            PlanChannel &channel) {
    BinScanner scanner(config);
    std::uint64_t delivered = 0;
    auto deliver = [&](ScanBin &&bin) {
        SuperblockPlan plan{delivered, std::move(bin.members), plan_stream.draw(num_leaves),
                            bin.span};
        if (!channel.push(std::move(plan))) {
            return false;
        }
        ++delivered;
        return true;
    };
    bool open = true;
    for (auto id : trace) {
        if (auto bin = scanner.feed(id)) {
            if (!(open = deliver(std::move(*bin)))) {
                break;
            }
        }
    }
    if (open) {
        if (auto bin = scanner.flush()) {
            deliver(std::move(*bin));
        }
    }
    channel.close();
    return delivered;
}

std::string format_plans(std::span<const SuperblockPlan> plans) {
    std::ostringstream out;
    for (const auto &plan : plans) {
        out << plan.sequence_number << ',';
        for (std::size_t i = 0; i < plan.members.size(); ++i) {
            out << (i ? ";" : "") << plan.members[i].value;
        }
        out << ',' << plan.future_leaf.value << '\n';
    }
    return out.str();
}

namespace {

std::uint64_t parse_u64(std::string_view field, std::uint64_t line) {
    std::uint64_t v = 0;
    const auto *end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw ParseError(line, "expected an unsigned integer, got '" + std::string(field) + "'");
    }
    return v;
}

} // namespace

std::vector<SuperblockPlan> parse_plans(const std::string &text) {
    std::vector<SuperblockPlan> plans;
    std::istringstream in(text);
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        if (c1 == std::string::npos || c1 == c2) {
            throw ParseError(line_no, "expected seq,members,leaf");
        }
        const std::string_view view(line);
        SuperblockPlan plan;
        plan.sequence_number = parse_u64(view.substr(0, c1), line_no);
        plan.future_leaf = LeafId{parse_u64(view.substr(c2 + 1), line_no)};
        auto members = view.substr(c1 + 1, c2 - c1 - 1);
        while (!members.empty()) {
            const auto semi = members.find(';');
            plan.members.push_back(BlockId{parse_u64(members.substr(0, semi), line_no)});
            members = semi == std::string_view::npos ? std::string_view{} : members.substr(semi + 1);
        }
        if (plan.members.empty()) {
            throw ParseError(line_no, "plan without members");
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

} // namespace laoram
