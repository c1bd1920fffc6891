#include "laoram/experiment.hpp"

#include "laoram/engine.hpp"
#include "laoram/errors.hpp"
#include "laoram/preprocessor.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace laoram {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) {
        parts.push_back(cur);
    }
    if (!text.empty() && text.back() == sep) {
        parts.emplace_back();
    }
    return parts;
}

std::uint64_t to_u64(const std::string &s, const std::string &what) {
    try {
        std::size_t used = 0;
        if (!s.empty() && s[0] == '-') {
            throw std::invalid_argument(s);
        }
        const auto v = std::stoull(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::logic_error &) {
        throw ConfigError(what + ": expected an unsigned integer, got '" + s + "'");
    }
}

std::uint32_t to_u32(const std::string &s, const std::string &what) {
    const auto v = to_u64(s, what);
    if (v > UINT32_MAX) {
        throw ConfigError(what + ": " + s + " is too large");
    }
    return static_cast<std::uint32_t>(v);
}

// Typed, schema-checked access to one JSON object. Problems are collected
// rather than thrown so that validate can list all of them at once.
class Reader {
public:
    Reader(const json &obj, std::string prefix, std::vector<std::string> &errors)
        : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
        if (!obj.is_object()) {
            errors_.push_back(where("") + "expected an object");
        }
    }

    template <typename T>
    bool get(const char *key, T &out) {
        known_.insert(key);
        if (!obj_.is_object()) {
            return false;
        }
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            return false;
        }
        if (!convert(*it, out)) {
            errors_.push_back(where(key) + "wrong type or out of range");
            return false;
        }
        return true;
    }

    const json *child(const char *key) {
        known_.insert(key);
        if (!obj_.is_object()) {
            return nullptr;
        }
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() {
        if (!obj_.is_object()) {
            return;
        }
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!known_.contains(it.key())) {
                errors_.push_back(where(it.key()) + "unknown key");
            }
        }
    }

    std::string where(const std::string &key) const {
        const auto full = prefix_.empty() ? key : (key.empty() ? prefix_ : prefix_ + "." + key);
        return full.empty() ? std::string{} : full + ": ";
    }

private:
    static bool convert(const json &v, std::uint64_t &out) {
        if (!v.is_number_unsigned()) {
            return false;
        }
        out = v.get<std::uint64_t>();
        return true;
    }
    static bool convert(const json &v, std::uint32_t &out) {
        std::uint64_t wide = 0;
        if (!convert(v, wide) || wide > UINT32_MAX) {
            return false;
        }
        out = static_cast<std::uint32_t>(wide);
        return true;
    }
    static bool convert(const json &v, double &out) {
        if (!v.is_number()) {
            return false;
        }
        out = v.get<double>();
        return true;
    }
    static bool convert(const json &v, bool &out) {
        if (!v.is_boolean()) {
            return false;
        }
        out = v.get<bool>();
        return true;
    }
    static bool convert(const json &v, std::string &out) {
        if (!v.is_string()) {
            return false;
        }
        out = v.get<std::string>();
        return true;
    }
    static bool convert(const json &v, std::vector<std::uint32_t> &out) {
        if (!v.is_array()) {
            return false;
        }
        out.clear();
        for (const auto &e : v) {
            std::uint32_t x = 0;
            if (!convert(e, x)) {
                return false;
            }
            out.push_back(x);
        }
        return true;
    }

    const json &obj_;
    std::string prefix_;
    std::vector<std::string> &errors_;
    std::set<std::string> known_;
};

ScheduleSpec parse_schedule(const json &j, std::vector<std::string> &errors) {
    if (j.is_string()) {
        try {
            return ScheduleSpec::parse(j.get<std::string>());
        } catch (const ConfigError &e) {
            errors.push_back(std::string("schedule: ") + e.what());
            return {};
        }
    }
    ScheduleSpec spec;
    Reader r(j, "schedule", errors);
    std::string kind = "uniform";
    r.get("kind", kind);
    if (kind == "uniform") {
        spec.kind = ScheduleSpec::Kind::uniform;
        r.get("z", spec.first);
    } else if (kind == "linear") {
        spec.kind = ScheduleSpec::Kind::linear;
        r.get("root", spec.first);
        r.get("leaf", spec.second);
    } else if (kind == "step") {
        spec.kind = ScheduleSpec::Kind::step;
        r.get("internal", spec.first);
        r.get("leaf", spec.second);
    } else if (kind == "explicit") {
        spec.kind = ScheduleSpec::Kind::explicit_list;
        r.get("sizes", spec.sizes);
    } else {
        errors.push_back("schedule.kind: unknown schedule '" + kind + "'");
    }
    r.finish();
    return spec;
}

TraceSpec parse_trace_spec(const json &j, std::vector<std::string> &errors) {
    if (j.is_string()) {
        try {
            return TraceSpec::parse(j.get<std::string>());
        } catch (const ConfigError &e) {
            errors.push_back(std::string("trace: ") + e.what());
            return {};
        }
    }
    TraceSpec spec;
    Reader r(j, "trace", errors);
    std::string kind = "permutation";
    r.get("kind", kind);
    if (kind == "permutation") {
        spec.kind = TraceSource::permutation;
        r.get("epochs", spec.epochs);
    } else if (kind == "gaussian") {
        spec.kind = TraceSource::gaussian;
        r.get("count", spec.count);
        r.get("mean_frac", spec.mean_frac);
        r.get("stddev_frac", spec.stddev_frac);
    } else if (kind == "grouped") {
        spec.kind = TraceSource::grouped;
        r.get("group", spec.group);
        r.get("epochs", spec.epochs);
    } else if (kind == "file") {
        spec.kind = TraceSource::file;
        r.get("path", spec.path);
    } else {
        errors.push_back("trace.kind: unknown trace '" + kind + "'");
    }
    r.finish();
    return spec;
}

ExperimentConfig parse_config(const json &j, std::vector<std::string> &errors) {
    ExperimentConfig c;
    Reader r(j, "", errors);
    r.get("n_blocks", c.n_blocks);
    const bool has_height = r.get("height", c.height);
    r.get("block_size", c.block_size);
    if (const auto *s = r.child("schedule")) {
        c.schedule = parse_schedule(*s, errors);
    }
    r.get("superblock_size", c.superblock_size);
    r.get("window", c.window);
    r.get("lookahead", c.lookahead);
    if (const auto *e = r.child("eviction")) {
        Reader er(*e, "eviction", errors);
        er.get("enabled", c.eviction.enabled);
        er.get("high", c.eviction.high);
        er.get("low", c.eviction.low);
        er.get("max_iterations", c.eviction.max_iterations);
        er.finish();
    }
    if (const auto *t = r.child("trace")) {
        c.trace = parse_trace_spec(*t, errors);
    }
    if (const auto *s = r.child("seeds")) {
        Reader sr(*s, "seeds", errors);
        sr.get("init", c.seeds.init);
        sr.get("plan", c.seeds.plan);
        sr.get("remap", c.seeds.remap);
        sr.get("evict", c.seeds.evict);
        sr.get("trace", c.seeds.trace);
        sr.finish();
    }
    std::string mode = "laoram";
    if (r.get("mode", mode)) {
        if (mode == "laoram") {
            c.mode = Mode::laoram;
        } else if (mode == "pathoram") {
            c.mode = Mode::pathoram;
        } else {
            errors.push_back("mode: expected laoram or pathoram, got '" + mode + "'");
        }
    }
    std::string source = "uniform";
    if (r.get("pathoram_source", source)) {
        if (source == "uniform") {
            c.pathoram_source = PathoramSource::uniform;
        } else if (source == "planned") {
            c.pathoram_source = PathoramSource::planned;
        } else {
            errors.push_back("pathoram_source: expected uniform or planned, got '" + source + "'");
        }
    }
    r.get("stash_hit_dummy_read", c.stash_hit_dummy_read);
    r.get("queue_capacity", c.queue_capacity);
    r.get("compare_baseline", c.compare_baseline);
    r.finish();
    if (!has_height) {
        c.height = c.n_blocks <= 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(c.n_blocks - 1));
    }
    return c;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

BucketSchedule ScheduleSpec::build(std::uint32_t height) const {
    switch (kind) {
    case Kind::uniform:
        return BucketSchedule::uniform(height, first);
    case Kind::linear:
        return BucketSchedule::linear(height, first, second);
    case Kind::step:
        return BucketSchedule::step(height, first, second);
    case Kind::explicit_list:
        return BucketSchedule(sizes);
    }
    throw ConfigError("unknown schedule kind");
}

ScheduleSpec ScheduleSpec::parse(const std::string &text) {
    const auto parts = split(text, ':');
    ScheduleSpec spec;
    const auto &kind = parts.at(0);
    if (kind == "uniform" && parts.size() == 2) {
        spec.kind = Kind::uniform;
        spec.first = to_u32(parts[1], "uniform bucket size");
    } else if (kind == "linear" && parts.size() == 3) {
        spec.kind = Kind::linear;
        spec.first = to_u32(parts[1], "root bucket size");
        spec.second = to_u32(parts[2], "leaf bucket size");
    } else if (kind == "step" && parts.size() == 3) {
        spec.kind = Kind::step;
        spec.first = to_u32(parts[1], "internal bucket size");
        spec.second = to_u32(parts[2], "leaf bucket size");
    } else if (kind == "explicit" && parts.size() == 2) {
        spec.kind = Kind::explicit_list;
        for (const auto &s : split(parts[1], '/')) {
            spec.sizes.push_back(to_u32(s, "bucket size"));
        }
    } else {
        throw ConfigError("cannot parse schedule '" + text +
                          "' (uniform:Z, linear:ROOT:LEAF, step:INTERNAL:LEAF, explicit:A/B/...)");
    }
    return spec;
}

std::string ScheduleSpec::label() const {
    switch (kind) {
    case Kind::uniform:
        return "uniform:" + std::to_string(first);
    case Kind::linear:
        return "linear:" + std::to_string(first) + ":" + std::to_string(second);
    case Kind::step:
        return "step:" + std::to_string(first) + ":" + std::to_string(second);
    case Kind::explicit_list: {
        std::string out = "explicit:";
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            out += (i ? "/" : "") + std::to_string(sizes[i]);
        }
        return out;
    }
    }
    return "?";
}

TraceSpec TraceSpec::parse(const std::string &text) {
    const auto colon = text.find(':');
    const auto kind = text.substr(0, colon);
    const auto rest = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
    const auto parts = split(rest, ':');
    TraceSpec spec;
    if (kind == "permutation") {
        spec.kind = TraceSource::permutation;
        if (!rest.empty()) {
            spec.epochs = to_u64(rest, "permutation epochs");
        }
    } else if (kind == "gaussian") {
        spec.kind = TraceSource::gaussian;
        if (!rest.empty()) {
            spec.count = to_u64(parts[0], "gaussian count");
            try {
                if (parts.size() > 1) {
                    spec.mean_frac = std::stod(parts[1]);
                }
                if (parts.size() > 2) {
                    spec.stddev_frac = std::stod(parts[2]);
                }
            } catch (const std::logic_error &) {
                throw ConfigError("cannot parse gaussian parameters in '" + text + "'");
            }
        }
    } else if (kind == "grouped") {
        spec.kind = TraceSource::grouped;
        if (!rest.empty()) {
            spec.group = to_u64(parts[0], "group size");
            if (parts.size() > 1) {
                spec.epochs = to_u64(parts[1], "grouped epochs");
            }
        }
    } else if (kind == "file" && !rest.empty()) {
        spec.kind = TraceSource::file;
        spec.path = rest;
    } else {
        throw ConfigError("cannot parse trace '" + text +
                          "' (permutation:EPOCHS, gaussian:COUNT[:MEAN[:SD]], grouped:G[:EPOCHS], "
                          "file:PATH)");
    }
    return spec;
}

std::string TraceSpec::label() const {
    switch (kind) {
    case TraceSource::permutation:
        return "permutation:" + std::to_string(epochs);
    case TraceSource::gaussian:
        return "gaussian:" + std::to_string(count) + ":" + format_double(mean_frac) + ":" +
               format_double(stddev_frac);
    case TraceSource::grouped:
        return "grouped:" + std::to_string(group) + ":" + std::to_string(epochs);
    case TraceSource::file:
        return "file:" + path;
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_json(const json &j) {
    std::vector<std::string> errors;
    auto c = parse_config(j, errors);
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto &e : errors) {
            msg += "\n  " + e;
        }
        throw ConfigError(msg);
    }
    return c;
}

ordered_json ExperimentConfig::to_json() const {
    ordered_json j;
    j["n_blocks"] = n_blocks;
    j["height"] = height;
    j["block_size"] = block_size;
    ordered_json s;
    switch (schedule.kind) {
    case ScheduleSpec::Kind::uniform:
        s["kind"] = "uniform";
        s["z"] = schedule.first;
        break;
    case ScheduleSpec::Kind::linear:
        s["kind"] = "linear";
        s["root"] = schedule.first;
        s["leaf"] = schedule.second;
        break;
    case ScheduleSpec::Kind::step:
        s["kind"] = "step";
        s["internal"] = schedule.first;
        s["leaf"] = schedule.second;
        break;
    case ScheduleSpec::Kind::explicit_list:
        s["kind"] = "explicit";
        s["sizes"] = schedule.sizes;
        break;
    }
    j["schedule"] = s;
    j["superblock_size"] = superblock_size;
    j["window"] = window;
    j["lookahead"] = lookahead;
    j["eviction"] = {{"enabled", eviction.enabled},
                     {"high", eviction.high},
                     {"low", eviction.low},
                     {"max_iterations", eviction.max_iterations}};
    ordered_json t;
    t["kind"] = to_string(trace.kind);
    switch (trace.kind) {
    case TraceSource::permutation:
        t["epochs"] = trace.epochs;
        break;
    case TraceSource::gaussian:
        t["count"] = trace.count;
        t["mean_frac"] = trace.mean_frac;
        t["stddev_frac"] = trace.stddev_frac;
        break;
    case TraceSource::grouped:
        t["group"] = trace.group;
        t["epochs"] = trace.epochs;
        break;
    case TraceSource::file:
        t["path"] = trace.path;
        break;
    }
    j["trace"] = t;
    j["seeds"] = {{"init", seeds.init},
                  {"plan", seeds.plan},
                  {"remap", seeds.remap},
                  {"evict", seeds.evict},
                  {"trace", seeds.trace}};
    j["mode"] = mode == Mode::laoram ? "laoram" : "pathoram";
    j["pathoram_source"] = pathoram_source == PathoramSource::uniform ? "uniform" : "planned";
    j["stash_hit_dummy_read"] = stash_hit_dummy_read;
    j["queue_capacity"] = queue_capacity;
    j["compare_baseline"] = compare_baseline;
    return j;
}

std::vector<std::string> ExperimentConfig::violations() const {
    std::vector<std::string> out;
    if (n_blocks == 0) {
        out.push_back("n_blocks: must be at least 1");
    }
    if (block_size == 0) {
        out.push_back("block_size: must be at least 1");
    }
    try {
        const auto geo = geometry();
        if (n_blocks > geo.num_leaves()) {
            out.push_back("n_blocks: " + std::to_string(n_blocks) + " blocks need at least " +
                          std::to_string(n_blocks) + " leaves, height " + std::to_string(height) +
                          " has " + std::to_string(geo.num_leaves()));
        }
    } catch (const ConfigError &e) {
        out.push_back(std::string("schedule: ") + e.what());
    }
    try {
        ScanConfig{superblock_size, window}.validate();
    } catch (const ConfigError &e) {
        out.push_back(std::string("superblock_size/window: ") + e.what());
    }
    if (eviction.enabled && eviction.low >= eviction.high) {
        out.push_back("eviction: low watermark " + std::to_string(eviction.low) +
                      " must be below high watermark " + std::to_string(eviction.high));
    }
    switch (trace.kind) {
    case TraceSource::permutation:
        if (trace.epochs == 0) {
            out.push_back("trace.epochs: must be at least 1");
        }
        break;
    case TraceSource::gaussian:
        if (!(trace.mean_frac >= 0.0 && trace.mean_frac <= 1.0)) {
            out.push_back("trace.mean_frac: must lie in [0, 1]");
        }
        if (!(trace.stddev_frac > 0.0)) {
            out.push_back("trace.stddev_frac: must be positive");
        }
        break;
    case TraceSource::grouped:
        if (trace.group == 0 || n_blocks % trace.group != 0) {
            out.push_back("trace.group: must be a positive divisor of n_blocks");
        }
        if (trace.epochs == 0) {
            out.push_back("trace.epochs: must be at least 1");
        }
        break;
    case TraceSource::file:
        if (trace.path.empty()) {
            out.push_back("trace.path: missing");
        } else if (!std::filesystem::exists(trace.path)) {
            out.push_back("trace.path: " + trace.path + " does not exist");
        }
        break;
    }
    if (mode == Mode::pathoram && pathoram_source == PathoramSource::planned &&
        superblock_size != 1) {
        out.push_back("pathoram_source: planned PathORAM needs superblock_size 1");
    }
    if (queue_capacity == 0) {
        out.push_back("queue_capacity: must be at least 1");
    }
    return out;
}

void ExperimentConfig::validate() const {
    const auto v = violations();
    if (!v.empty()) {
        std::string msg = "invalid config:";
        for (const auto &e : v) {
            msg += "\n  " + e;
        }
        throw ConfigError(msg);
    }
}

TreeGeometry ExperimentConfig::geometry() const {
    return TreeGeometry(height, schedule.build(height), block_size);
}

ExperimentConfig ExperimentConfig::baseline() const {
    ExperimentConfig b = *this;
    b.mode = Mode::pathoram;
    b.pathoram_source = PathoramSource::uniform;
    b.superblock_size = 1;
    b.window = 0;
    b.compare_baseline = false;
    return b;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    auto c = ExperimentConfig::from_json(j);
    if (c.trace.kind == TraceSource::file && std::filesystem::path(c.trace.path).is_relative()) {
        c.trace.path = (path.parent_path() / c.trace.path).lexically_normal().string();
    }
    return c;
}

AccessTrace build_trace(const ExperimentConfig &c) {
    const auto &t = c.trace;
    switch (t.kind) {
    case TraceSource::permutation:
        return permutation_trace(c.n_blocks, t.epochs, c.seeds.trace);
    case TraceSource::gaussian:
        return gaussian_trace(c.n_blocks, t.count == 0 ? c.n_blocks : t.count, t.mean_frac,
                              t.stddev_frac, c.seeds.trace);
    case TraceSource::grouped:
        return grouped_trace(c.n_blocks, t.group, t.epochs, c.seeds.trace);
    case TraceSource::file:
        return load_trace(t.path, c.n_blocks);
    }
    throw ConfigError("unknown trace kind");
}

RunResult run_experiment(const ExperimentConfig &config, const RunOptions &run_options) {
    config.validate();
    const auto geo = config.geometry();
    const auto trace = build_trace(config);
    const auto &entries = trace.entries;
    const std::uint64_t total = entries.size();

    EngineOptions opts;
    opts.policy = config.eviction.enabled
                      ? EvictionPolicy(config.eviction.high, config.eviction.low)
                      : EvictionPolicy::disabled();
    opts.remap_seed = config.seeds.remap;
    opts.evict_seed = config.seeds.evict;
    opts.stash_hit_dummy_read = config.stash_hit_dummy_read;
    opts.max_drain_reads = config.eviction.max_iterations;

    RunResult result;
    result.num_leaves = geo.num_leaves();

    auto finish = [&](const Engine &engine) {
        result.counters = engine.counters();
        result.leaf_log = engine.leaf_log();
        result.final_stash = engine.stash().occupancy();
        if (run_options.snapshot) {
            result.snapshot = engine.tree().snapshot();
        }
    };

    if (config.mode == Mode::pathoram && config.pathoram_source == PathoramSource::uniform) {
        Engine engine(config.n_blocks, geo, config.seeds.init, opts);
        UniformSource source(config.seeds.remap);
        for (auto id : entries) {
            engine.pathoram_access(AccessRequest::read(id), source);
        }
        finish(engine);
        return result;
    }

    // Two-stage pipeline: the preprocessor thread scans the trace and pushes
    // plans; this thread keeps `lookahead` trace entries' worth of plans
    // loaded ahead of the request it is serving.
    PlanChannel channel(config.queue_capacity);
    LeafStream plan_stream(config.seeds.plan);
    std::exception_ptr producer_error;
    const ScanConfig scan_config{config.superblock_size, config.window};
    std::jthread producer([&] {
        try {
            pipeline_feed(entries, scan_config, geo.num_leaves(), plan_stream, channel);
        } catch (...) {
            producer_error = std::current_exception();
            channel.close();
        }
    });
    struct CloseOnExit {
        PlanChannel &channel;
        ~CloseOnExit() { channel.close(); }
    } close_on_exit{channel};

    std::vector<SuperblockPlan> pending;
    std::uint64_t pulled_span = 0;
    auto pull_until = [&](std::uint64_t target) {
        while (pulled_span < target) {
            auto plan = channel.pop();
            if (!plan) {
                break;
            }
            pulled_span += plan->effective_span();
            pending.push_back(std::move(*plan));
        }
    };
    auto target = [&](std::uint64_t t) {
        return config.lookahead == 0 ? total : std::min(total, t + config.lookahead);
    };

    // Blocks whose first plan is already visible start on that plan's leaf,
    // so their first superblock fetch finds them without an extra read.
    pull_until(target(0));
    std::vector<std::pair<BlockId, LeafId>> initial;
    {
        std::vector<bool> seen(config.n_blocks, false);
        for (const auto &plan : pending) {
            for (auto m : plan.members) {
                if (!seen[m.value]) {
                    seen[m.value] = true;
                    initial.emplace_back(m, plan.future_leaf);
                }
            }
        }
    }
    Engine engine(config.n_blocks, geo, config.seeds.init, opts, initial);
    PlanQueue planned_queue;
    PlannedSource planned_source(planned_queue, config.seeds.remap);
    const bool laoram = config.mode == Mode::laoram;
    auto deliver = [&] {
        for (auto &plan : pending) {
            ++result.plans;
            if (laoram) {
                engine.load_plan(std::move(plan));
            } else {
                planned_queue.push(std::move(plan));
            }
        }
        pending.clear();
    };
    deliver();

    for (std::uint64_t t = 0; t < total; ++t) {
        pull_until(target(t));
        deliver();
        const auto req = AccessRequest::read(entries[t]);
        if (laoram) {
            engine.laoram_access(req);
        } else {
            engine.pathoram_access(req, planned_source);
        }
    }
    producer.join();
    if (producer_error) {
        std::rethrow_exception(producer_error);
    }
    finish(engine);
    return result;
}

std::optional<ChiSquareResult> leaf_uniformity(const RunResult &result) {
    const std::uint64_t draws = result.leaf_log.size();
    std::uint64_t cells = 1;
    while (cells * 2 <= result.num_leaves && cells * 2 * 5 <= draws) {
        cells *= 2;
    }
    if (cells < 2) {
        return std::nullopt;
    }
    const auto hist = leaf_histogram(result.leaf_log, result.num_leaves, cells);
    return chi_square_uniformity(hist);
}

std::string fnv1a_hex(const std::string &bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string timeline_csv(const Counters &counters) {
    std::string out = "step,stash_occupancy\n";
    for (const auto &s : counters.stash_timeline) {
        out += std::to_string(s.step) + ',' + std::to_string(s.occupancy) + '\n';
    }
    return out;
}

std::string leaf_log_csv(const std::vector<FetchRecord> &log) {
    std::string out = "step,leaf,kind\n";
    for (const auto &r : log) {
        out += std::to_string(r.step) + ',' + std::to_string(r.leaf.value) + ',' +
               (r.kind == FetchKind::real ? "real" : "dummy") + '\n';
    }
    return out;
}

ordered_json summary_json(const ExperimentConfig &config, const RunResult &result,
                          const RunResult *baseline) {
    const auto &c = result.counters;
    ordered_json j;
    j["config_digest"] = fnv1a_hex(config.to_json().dump());
    j["counters"] = {{"real_accesses", c.real_accesses},
                     {"real_path_reads", c.real_path_reads},
                     {"dummy_reads", c.dummy_reads},
                     {"blocks_transferred", c.blocks_transferred},
                     {"bytes_transferred", c.bytes_transferred()},
                     {"plans", result.plans}};
    j["dummy_read_ratio"] = c.real_accesses == 0 ? ordered_json() : ordered_json(dummy_read_ratio(c));
    ordered_json traffic;
    traffic["blocks_transferred"] = c.blocks_transferred;
    if (baseline != nullptr) {
        traffic["reduction_vs_baseline"] = traffic_reduction(baseline->counters, c);
    }
    j["traffic"] = traffic;
    j["stash"] = {{"peak", c.stash_peak}, {"final", result.final_stash}};
    if (const auto u = leaf_uniformity(result)) {
        j["uniformity"] = {{"chi2", u->statistic}, {"p", u->p_value}, {"dof", u->degrees_of_freedom}};
    } else {
        j["uniformity"] = nullptr;
    }
    j["leaf_log_digest"] = fnv1a_hex(leaf_log_csv(result.leaf_log));
    return j;
}

std::vector<SweepRow> sweep(const ExperimentConfig &config, const std::string &axis,
                            const std::vector<std::string> &values) {
    if (axis != "S" && axis != "schedule" && axis != "trace" && axis != "watermarks") {
        throw ConfigError("unknown sweep axis '" + axis + "' (S, schedule, trace, watermarks)");
    }
    if (values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    std::vector<ExperimentConfig> configs;
    for (const auto &v : values) {
        ExperimentConfig c = config;
        c.compare_baseline = false;
        if (axis == "S") {
            c.superblock_size = to_u32(v, "superblock size");
        } else if (axis == "schedule") {
            c.schedule = ScheduleSpec::parse(v);
        } else if (axis == "trace") {
            c.trace = TraceSpec::parse(v);
        } else {
            const auto parts = split(v, ':');
            if (parts.size() != 2) {
                throw ConfigError("watermarks value '" + v + "' is not HIGH:LOW");
            }
            c.eviction.enabled = true;
            c.eviction.high = to_u64(parts[0], "high watermark");
            c.eviction.low = to_u64(parts[1], "low watermark");
        }
        c.validate();
        configs.push_back(c);
    }

    // Only the trace decides the baseline's request stream; every other axis
    // shares one baseline run built from the unswept config.
    std::vector<SweepRow> rows;
    std::map<std::string, std::size_t> baseline_row;
    std::vector<std::size_t> baseline_of;
    for (const auto &c : configs) {
        const auto b = axis == "trace" ? c.baseline() : config.baseline();
        const auto key = b.trace.label();
        if (!baseline_row.contains(key)) {
            baseline_row[key] = rows.size();
            rows.push_back({axis == "trace" ? "baseline:" + key : "baseline", b,
                            run_experiment(b), 1.0});
        }
        baseline_of.push_back(baseline_row[key]);
    }
    for (std::size_t i = 0; i < configs.size(); ++i) {
        auto result = run_experiment(configs[i]);
        const auto &base = rows[baseline_of[i]].result.counters;
        std::optional<double> reduction;
        if (base.real_accesses == result.counters.real_accesses) {
            reduction = traffic_reduction(base, result.counters);
        }
        rows.push_back({axis + "=" + values[i], configs[i], std::move(result), reduction});
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow> &rows) {
    std::string out =
        "label,mode,superblock_size,schedule,trace,high_watermark,low_watermark,real_accesses,"
        "real_path_reads,dummy_reads,dummy_read_ratio,blocks_transferred,traffic_reduction,"
        "stash_peak,final_stash\n";
    for (const auto &row : rows) {
        const auto &c = row.config;
        const auto &k = row.result.counters;
        out += row.label + ',' + (c.mode == Mode::laoram ? "laoram" : "pathoram") + ',' +
               std::to_string(c.superblock_size) + ',' + c.schedule.label() + ',' +
               c.trace.label() + ',' +
               (c.eviction.enabled ? std::to_string(c.eviction.high) : std::string("off")) + ',' +
               (c.eviction.enabled ? std::to_string(c.eviction.low) : std::string("off")) + ',' +
               std::to_string(k.real_accesses) + ',' + std::to_string(k.real_path_reads) + ',' +
               std::to_string(k.dummy_reads) + ',' +
               (k.real_accesses ? format_double(dummy_read_ratio(k)) : std::string()) + ',' +
               std::to_string(k.blocks_transferred) + ',' +
               (row.traffic_reduction ? format_double(*row.traffic_reduction) : std::string()) +
               ',' + std::to_string(k.stash_peak) + ',' + std::to_string(row.result.final_stash) +
               '\n';
    }
    return out;
}

double ValidationReport::overhead_vs_uniform() const {
    if (uniform_bytes == 0) {
        return 0.0;
    }
    return static_cast<double>(tree_bytes) / static_cast<double>(uniform_bytes) - 1.0;
}

ordered_json ValidationReport::to_json() const {
    ordered_json j;
    j["valid"] = ok();
    j["violations"] = violations;
    if (tree_bytes != 0) {
        j["storage"] = {{"raw_bytes", raw_bytes},
                        {"tree_bytes", tree_bytes},
                        {"uniform_bytes", uniform_bytes},
                        {"overhead_vs_uniform", overhead_vs_uniform()},
                        {"path_slots", path_slots}};
    }
    return j;
}

ValidationReport validate_config(const json &j) {
    ValidationReport report;
    const auto config = parse_config(j, report.violations);
    for (auto &v : config.violations()) {
        report.violations.push_back(std::move(v));
    }
    try {
        const auto geo = config.geometry();
        const TreeGeometry flat(config.height,
                                BucketSchedule::uniform(config.height, geo.schedule.sizes().back()),
                                config.block_size);
        report.raw_bytes = config.n_blocks * config.block_size;
        report.tree_bytes = storage_bytes(geo);
        report.uniform_bytes = storage_bytes(flat);
        report.path_slots = geo.schedule.path_slots();
    } catch (const ConfigError &) {
        // already listed among the violations
    }
    return report;
}

} // namespace laoram
