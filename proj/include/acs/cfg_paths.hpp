#pragma once

// Control-flow graph with artificial Entry/Sink nodes, and enumeration of the
// instruction sequences along simple Entry->Sink paths.

#include "acs/asm_ir.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace acs {

using BlockId = std::uint32_t;

struct CfgBlock {
    std::string label;                     // "<entry>" / "<sink>" for the artificial nodes
    std::vector<std::uint32_t> seqs;       // instruction seq indices in block order
    bool reachable = true;
};

/// Node 0 is Entry, nodes 1..n are the procedure's blocks in listing order,
/// node n+1 is Sink. Successor lists are kept in ascending id order.
class Cfg {
public:
    Cfg() = default;

    /// Graph over explicit blocks; used for synthetic graphs in tests.
    /// `instructions` is indexed by seq; `blocks` excludes Entry/Sink and
    /// `edges` uses the final ids (Entry = 0, Sink = blocks.size() + 1).
    static Cfg from_edges(std::vector<Instruction> instructions, std::vector<CfgBlock> blocks,
                          const std::vector<std::pair<BlockId, BlockId>>& edges);

    BlockId entry() const noexcept { return 0; }
    BlockId sink() const noexcept { return static_cast<BlockId>(blocks_.size() - 1); }
    std::size_t node_count() const noexcept { return blocks_.size(); }

    const CfgBlock& block(BlockId id) const { return blocks_.at(id); }
    const std::vector<BlockId>& successors(BlockId id) const { return succ_.at(id); }
    const std::vector<BlockId>& predecessors(BlockId id) const { return pred_.at(id); }
    std::vector<std::pair<BlockId, BlockId>> edges() const;
    std::size_t edge_count() const noexcept;

    const Instruction& instruction(std::uint32_t seq) const { return instructions_.at(seq); }
    const std::vector<Instruction>& instructions() const noexcept { return instructions_; }

    bool has_indirect_jump() const noexcept { return indirect_jump_; }
    bool has_unreachable_blocks() const noexcept;
    /// A block without terminator at the end of the listing falls off into Sink.
    bool falls_off_end() const noexcept { return falls_off_end_; }

private:
    friend Cfg build_cfg(const Procedure& procedure);
    void add_edge(BlockId from, BlockId to);
    void finalize();

    std::vector<Instruction> instructions_;
    std::vector<CfgBlock> blocks_;
    std::vector<std::vector<BlockId>> succ_;
    std::vector<std::vector<BlockId>> pred_;
    bool indirect_jump_ = false;
    bool falls_off_end_ = false;
};

/// Throws AnalysisError for a procedure with zero blocks.
Cfg build_cfg(const Procedure& procedure);

struct Path {
    std::vector<BlockId> blocks;           // Entry ... Sink
    std::vector<std::uint32_t> seqs;       // concatenated instruction seq indices
    bool operator==(const Path&) const = default;
};

struct PathSet {
    std::vector<Path> paths;
    bool truncated = false;                // max_paths reached
    bool sink_unreachable = false;
};

inline constexpr std::size_t kDefaultMaxPaths = 1000;

/// Depth-first simple-path enumeration, successors visited in ascending id.
PathSet enumerate_paths(const Cfg& cfg, std::size_t max_paths = kDefaultMaxPaths);

/// Drops paths whose instruction content (mnemonic and operands) repeats an
/// earlier path; first occurrence wins, order preserved.
PathSet compress_paths(const Cfg& cfg, const PathSet& paths);

/// Content key of a path's instruction sequence.
std::string path_content_key(const Cfg& cfg, const Path& path);

} // namespace acs
