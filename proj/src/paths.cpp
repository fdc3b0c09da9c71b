#include "acs/cfg_paths.hpp"

#include <unordered_set>

namespace acs {

PathSet enumerate_paths(const Cfg& cfg, std::size_t max_paths) {
    PathSet result;
    if (max_paths == 0) max_paths = 1;
    const BlockId sink = cfg.sink();
    if (!cfg.block(sink).reachable) {
        result.sink_unreachable = true;
        return result;
    }

    // Iterative DFS; each frame remembers the next successor slot to try.
    struct Frame {
        BlockId node;
        std::size_t next = 0;
    };
    std::vector<Frame> stack{{cfg.entry(), 0}};
    std::vector<bool> on_path(cfg.node_count(), false);
    on_path[cfg.entry()] = true;

    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.node == sink) {
            Path p;
            for (const auto& f : stack) {
                p.blocks.push_back(f.node);
                const auto& seqs = cfg.block(f.node).seqs;
                p.seqs.insert(p.seqs.end(), seqs.begin(), seqs.end());
            }
            result.paths.push_back(std::move(p));
            if (result.paths.size() >= max_paths) {
                result.truncated = true;
                break;
            }
            on_path[top.node] = false;
            stack.pop_back();
            continue;
        }
        const auto& succ = cfg.successors(top.node);
        if (top.next >= succ.size()) {
            on_path[top.node] = false;
            stack.pop_back();
            continue;
        }
        const BlockId v = succ[top.next++];
        if (on_path[v]) continue;
        on_path[v] = true;
        stack.push_back({v, 0});
    }

    // Reached the cap exactly on the last path: only truncated if more exist.
    if (result.truncated) {
        // Probe whether any further path exists by continuing the search once.
        bool more = false;
        on_path[stack.back().node] = false;
        stack.pop_back();
        while (!stack.empty() && !more) {
            Frame& top = stack.back();
            if (top.node == sink) {
                more = true;
                break;
            }
            const auto& succ = cfg.successors(top.node);
            if (top.next >= succ.size()) {
                on_path[top.node] = false;
                stack.pop_back();
                continue;
            }
            const BlockId v = succ[top.next++];
            if (on_path[v]) continue;
            on_path[v] = true;
            stack.push_back({v, 0});
        }
        result.truncated = more;
    }
    if (result.paths.empty()) result.sink_unreachable = true;
    return result;
}

std::string path_content_key(const Cfg& cfg, const Path& path) {
    std::string key;
    for (auto seq : path.seqs) {
        key += print_instruction(cfg.instruction(seq));
        key.push_back('\n');
    }
    return key;
}

PathSet compress_paths(const Cfg& cfg, const PathSet& paths) {
    PathSet out;
    out.truncated = paths.truncated;
    out.sink_unreachable = paths.sink_unreachable;
    std::unordered_set<std::string> seen;
    for (const auto& p : paths.paths) {
        if (seen.insert(path_content_key(cfg, p)).second) out.paths.push_back(p);
    }
    return out;
}

} // namespace acs
