#include "acs/cfg_paths.hpp"
#include "acs/error.hpp"

#include <algorithm>
#include <unordered_set>

namespace acs {

void Cfg::add_edge(BlockId from, BlockId to) {
    auto& s = succ_[from];
    if (std::find(s.begin(), s.end(), to) == s.end()) s.push_back(to);
}

void Cfg::finalize() {
    pred_.assign(blocks_.size(), {});
    for (BlockId u = 0; u < succ_.size(); ++u) {
        std::sort(succ_[u].begin(), succ_[u].end());
        for (BlockId v : succ_[u]) pred_[v].push_back(u);
    }
    for (auto& p : pred_) std::sort(p.begin(), p.end());

    for (auto& b : blocks_) b.reachable = false;
    std::vector<BlockId> stack{entry()};
    blocks_[entry()].reachable = true;
    while (!stack.empty()) {
        const BlockId u = stack.back();
        stack.pop_back();
        for (BlockId v : succ_[u]) {
            if (!blocks_[v].reachable) {
                blocks_[v].reachable = true;
                stack.push_back(v);
            }
        }
    }
}

Cfg Cfg::from_edges(std::vector<Instruction> instructions, std::vector<CfgBlock> blocks,
                    const std::vector<std::pair<BlockId, BlockId>>& edges) {
    Cfg cfg;
    cfg.instructions_ = std::move(instructions);
    cfg.blocks_.reserve(blocks.size() + 2);
    cfg.blocks_.push_back({"<entry>", {}, true});
    for (auto& b : blocks) cfg.blocks_.push_back(std::move(b));
    cfg.blocks_.push_back({"<sink>", {}, true});
    cfg.succ_.assign(cfg.blocks_.size(), {});
    for (auto [u, v] : edges) {
        if (u >= cfg.blocks_.size() || v >= cfg.blocks_.size()) throw AnalysisError("edge endpoint out of range");
        cfg.add_edge(u, v);
    }
    cfg.finalize();
    return cfg;
}

std::vector<std::pair<BlockId, BlockId>> Cfg::edges() const {
    std::vector<std::pair<BlockId, BlockId>> out;
    for (BlockId u = 0; u < succ_.size(); ++u) {
        for (BlockId v : succ_[u]) out.emplace_back(u, v);
    }
    return out;
}

std::size_t Cfg::edge_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : succ_) n += s.size();
    return n;
}

bool Cfg::has_unreachable_blocks() const noexcept {
    return std::any_of(blocks_.begin() + 1, blocks_.end() - 1, [](const CfgBlock& b) { return !b.reachable; });
}

Cfg build_cfg(const Procedure& procedure) {
    if (procedure.blocks.empty()) {
        throw AnalysisError("procedure '" + procedure.name + "' has no basic blocks");
    }
    Cfg cfg;
    const auto n = static_cast<BlockId>(procedure.blocks.size());
    cfg.blocks_.push_back({"<entry>", {}, true});
    for (const auto& block : procedure.blocks) {
        CfgBlock cb{block.label, {}, true};
        for (const auto& inst : block.instructions) {
            cb.seqs.push_back(inst.seq);
            if (cfg.instructions_.size() <= inst.seq) cfg.instructions_.resize(inst.seq + 1);
            cfg.instructions_[inst.seq] = inst;
        }
        cfg.blocks_.push_back(std::move(cb));
    }
    cfg.blocks_.push_back({"<sink>", {}, true});
    cfg.succ_.assign(cfg.blocks_.size(), {});
    const BlockId sink = n + 1;

    auto id_of = [&](std::string_view label) -> BlockId {
        auto pos = procedure.find_block(label);
        if (!pos) throw AnalysisError("jump to undefined label '" + std::string(label) + "'");
        return static_cast<BlockId>(*pos + 1);
    };

    cfg.add_edge(0, 1);
    for (BlockId i = 1; i <= n; ++i) {
        const auto& insts = procedure.blocks[i - 1].instructions;
        const BlockId next = i + 1;            // Sink when i == n
        if (insts.empty() || !insts.back().is_terminator) {
            if (i == n) cfg.falls_off_end_ = true;
            cfg.add_edge(i, next);
            continue;
        }
        const auto& last = insts.back();
        if (last.mnemonic == "ret") {
            cfg.add_edge(i, sink);
        } else if (last.mnemonic == "jmp") {
            if (const auto* label = std::get_if<Label>(&last.operands.at(0))) {
                cfg.add_edge(i, id_of(label->name));
            } else {
                cfg.indirect_jump_ = true;
                cfg.add_edge(i, sink);
            }
        } else {
            cfg.add_edge(i, id_of(std::get<Label>(last.operands.at(0)).name));
            if (i == n) cfg.falls_off_end_ = true;
            cfg.add_edge(i, next);
        }
    }
    cfg.finalize();
    return cfg;
}

} // namespace acs
