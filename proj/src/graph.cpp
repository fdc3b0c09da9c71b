#include "acs/repr.hpp"

#include <algorithm>
#include <set>

namespace acs {

void AugmentedGraph::rebuild_groups() {
    groups.clear();
    for (std::uint32_t id = 0; id < nodes.size(); ++id) {
        const auto k = nodes[id].callee.kind;
        if (k == CalleeKind::entry || k == CalleeKind::sink) continue;
        groups[nodes[id].origin].push_back(id);
    }
}

AugmentedGraph build_augmented_graph(const Cfg& cfg, const std::vector<CallSiteList>& per_path,
                                     std::size_t duplication_cap) {
    if (duplication_cap == 0) duplication_cap = 1;
    AugmentedGraph g;
    g.nodes.push_back({{CalleeKind::entry, {}}, {}, {}});
    g.nodes.push_back({{CalleeKind::sink, {}}, {}, {}});

    // Distinct value variants per origin, in first-seen path order.
    std::map<Origin, std::vector<AugmentedCallSite>> variants;
    for (const auto& list : per_path) {
        for (const auto& site : list) {
            auto& v = variants[site.origin];
            if (std::any_of(v.begin(), v.end(), [&](const auto& x) { return x.same_content(site); })) continue;
            if (v.size() >= duplication_cap) {
                g.duplication_truncated = true;
                continue;
            }
            v.push_back(site);
        }
    }
    for (const auto& [origin, vs] : variants) {
        for (const auto& site : vs) {
            g.groups[origin].push_back(static_cast<std::uint32_t>(g.nodes.size()));
            g.nodes.push_back(site);
        }
    }

    // Call origins of each block, in instruction order.
    std::vector<std::vector<Origin>> block_calls(cfg.node_count());
    for (const auto& [origin, ids] : g.groups) block_calls[origin.block].push_back(origin);
    for (auto& calls : block_calls) {
        std::sort(calls.begin(), calls.end(), [&](const Origin& a, const Origin& b) {
            const auto& seqs = cfg.block(a.block).seqs;
            return std::find(seqs.begin(), seqs.end(), a.seq) < std::find(seqs.begin(), seqs.end(), b.seq);
        });
    }

    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    auto connect = [&](const std::vector<std::uint32_t>& from, const std::vector<std::uint32_t>& to) {
        for (auto u : from) {
            for (auto v : to) edges.emplace(u, v);
        }
    };

    // Targets reached from `start`'s successors, passing through call-free blocks.
    auto reach = [&](BlockId start) {
        std::vector<std::uint32_t> targets;
        std::vector<bool> visited(cfg.node_count(), false);
        std::vector<BlockId> stack(cfg.successors(start).rbegin(), cfg.successors(start).rend());
        while (!stack.empty()) {
            const BlockId v = stack.back();
            stack.pop_back();
            if (visited[v]) continue;
            visited[v] = true;
            if (v == cfg.sink()) {
                targets.push_back(kGraphSink);
            } else if (!block_calls[v].empty()) {
                const auto& first = g.groups.at(block_calls[v].front());
                targets.insert(targets.end(), first.begin(), first.end());
            } else {
                const auto& succ = cfg.successors(v);
                stack.insert(stack.end(), succ.rbegin(), succ.rend());
            }
        }
        return targets;
    };

    connect({kGraphEntry}, reach(cfg.entry()));
    for (BlockId b = 1; b + 1 < cfg.node_count(); ++b) {
        const auto& calls = block_calls[b];
        if (calls.empty()) continue;
        for (std::size_t i = 0; i + 1 < calls.size(); ++i) connect(g.groups.at(calls[i]), g.groups.at(calls[i + 1]));
        connect(g.groups.at(calls.back()), reach(b));
    }
    g.edges.assign(edges.begin(), edges.end());
    return g;
}

} // namespace acs
