#pragma once

// Augmented call sites: callee subtokens plus one rendered value per argument
// register. Built per path, then folded into a call-site graph and a set of
// call-site sequences.

#include "acs/callsite.hpp"
#include "acs/cfg_paths.hpp"
#include "acs/slicer.hpp"

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace acs {

enum class CalleeKind : std::uint8_t { api, unknown_internal, unknown_indirect, entry, sink };

struct Callee {
    CalleeKind kind = CalleeKind::api;
    std::vector<std::string> tokens;   // api only
    auto operator<=>(const Callee&) const = default;
};

Callee callee_of(const CallSiteProto& proto);

enum class ValueKind : std::uint8_t { tag, concrete_int, concrete_str };

/// A rendered argument value: a tag name, a decimal integer or `STR:<subtoken>`.
struct ArgValue {
    ValueKind kind = ValueKind::tag;
    std::string text;                  // tag name or STR:<subtoken>
    std::int64_t number = 0;           // concrete_int only

    static ArgValue tag(std::string name) { return {ValueKind::tag, std::move(name), 0}; }
    static ArgValue integer(std::int64_t v) { return {ValueKind::concrete_int, {}, v}; }
    static ArgValue str(std::string rendered) { return {ValueKind::concrete_str, std::move(rendered), 0}; }

    auto operator<=>(const ArgValue&) const = default;
    std::string to_string() const;
};

ArgValue render_value(const AbstractTag& tag);

struct Origin {
    BlockId block = 0;
    std::uint32_t seq = 0;
    auto operator<=>(const Origin&) const = default;
};

struct AugmentedCallSite {
    Callee callee;
    std::vector<ArgValue> values;
    Origin origin;

    auto operator<=>(const AugmentedCallSite&) const = default;
    /// Same callee and values, wherever they come from.
    bool same_content(const AugmentedCallSite& other) const {
        return callee == other.callee && values == other.values;
    }
    std::string to_string() const;     // e.g. "connect(RET, ARG, 16)"
};

using CallSiteList = std::vector<AugmentedCallSite>;

inline constexpr std::uint32_t kGraphEntry = 0;
inline constexpr std::uint32_t kGraphSink = 1;
inline constexpr std::size_t kDefaultDuplicationCap = 8;
inline constexpr std::size_t kDefaultMaxSeqLen = 60;

/// Node 0 is Entry and node 1 is Sink; call-site nodes follow, ordered by
/// origin and then by first appearance of their value vector across paths.
struct AugmentedGraph {
    std::vector<AugmentedCallSite> nodes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;     // sorted, unique
    std::map<Origin, std::vector<std::uint32_t>> groups;
    bool duplication_truncated = false;

    bool operator==(const AugmentedGraph&) const = default;
    /// Recomputes `groups` from node origins.
    void rebuild_groups();
};

struct SequenceSet {
    std::vector<CallSiteList> sequences;
    bool truncated = false;            // some path had more than l call sites
    bool operator==(const SequenceSet&) const = default;
};

struct AnalysisOptions {
    ArityMode arity_mode = ArityMode::library_debug;
    bool values = true;                // false: callee tokens only
    bool listing_order = false;        // sequences from raw listing order
    bool prefix_cache = true;
    std::size_t max_paths = kDefaultMaxPaths;
    std::size_t max_seq_len = kDefaultMaxSeqLen;
    std::size_t duplication_cap = kDefaultDuplicationCap;
};

struct AnalysisFlags {
    std::size_t path_count = 0;
    bool paths_truncated = false;
    bool sink_unreachable = false;
    bool indirect_jump = false;
    bool unreachable_blocks = false;
    bool falls_off_end = false;
    bool duplication_truncated = false;
    bool sequences_truncated = false;
    bool overflow = false;             // constant folding wrapped
    bool concrete_conflict = false;
    std::size_t unknown_arity_calls = 0;
    std::size_t clamped_arity_calls = 0;
    bool operator==(const AnalysisFlags&) const = default;
};

/// One prototype per call origin (seq), agreed across all paths: the callee
/// must match on every path (otherwise UnknownIndirect) and arity is the
/// maximum observed.
std::map<std::uint32_t, CallSiteProto> reconstruct_prototypes(const Program& program, const Cfg& cfg,
                                                               const PathSet& paths, const SliceContext& ctx,
                                                               ArityMode mode);

/// Memoizes argument values by the instruction prefix ending at the call.
class PrefixCache {
public:
    struct Entry {
        std::vector<ArgValue> values;
        bool overflow = false;
        bool conflict = false;
    };
    const Entry* find(const std::vector<std::uint32_t>& prefix) const;
    void insert(std::vector<std::uint32_t> prefix, Entry entry);
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t hits() const noexcept { return hits_; }

private:
    std::map<std::vector<std::uint32_t>, Entry> entries_;
    mutable std::size_t hits_ = 0;
};

/// One augmented call site per call on the path, in path order.
CallSiteList augment_path(const Cfg& cfg, const Path& path, const std::map<std::uint32_t, CallSiteProto>& protos,
                          const SliceContext& ctx, const AnalysisOptions& options, PrefixCache* cache = nullptr,
                          AnalysisFlags* flags = nullptr);

/// Call sites in raw listing order, valued over the straight-line instruction stream.
CallSiteList listing_order_callsites(const Program& program, const Procedure& procedure,
                                     const AnalysisOptions& options, AnalysisFlags* flags = nullptr);

AugmentedGraph build_augmented_graph(const Cfg& cfg, const std::vector<CallSiteList>& per_path,
                                     std::size_t duplication_cap = kDefaultDuplicationCap);

/// Truncates each list to `max_len`, drops empty and repeated sequences.
SequenceSet to_sequences(const std::vector<CallSiteList>& per_path, std::size_t max_len = kDefaultMaxSeqLen);

struct ProcedureAnalysis {
    PathSet paths;
    std::vector<CallSiteList> per_path;
    AugmentedGraph graph;
    SequenceSet sequences;
    AnalysisFlags flags;
};

ProcedureAnalysis analyze_procedure(const Program& program, const Procedure& procedure,
                                    const AnalysisOptions& options = {});

} // namespace acs
