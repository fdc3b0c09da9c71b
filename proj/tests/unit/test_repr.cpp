#include "acs/repr.hpp"
#include "acs/subtokens.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace acs;

namespace {

Program fixture(const std::string& name) {
    return parse_listing(oracle::slurp(std::string(ACS_FIXTURE_DIR) + "/" + name));
}

std::vector<std::string> rendered(const CallSiteList& list) {
    std::vector<std::string> out;
    for (const auto& s : list) out.push_back(s.to_string());
    return out;
}

AugmentedCallSite site(const std::string& name, std::vector<ArgValue> values, Origin origin) {
    return {{CalleeKind::api, {name}}, std::move(values), origin};
}

// Forward-only procedures: blocks set rdi/rsi and call g or h at random.
std::string random_dag_proc(oracle::Gen& g) {
    const int n = 2 + static_cast<int>(g.below(7));
    std::string t = ".import g 2\n.import h 1\n.proc p args=1\n";
    for (int i = 1; i <= n; ++i) {
        t += ".bb L" + std::to_string(i) + "\n";
        const int ops = static_cast<int>(g.below(4));
        for (int k = 0; k < ops; ++k) {
            switch (g.below(4)) {
            case 0: t += "    mov rsi, " + std::to_string(g.below(4)) + "\n"; break;
            case 1: t += "    mov rdi, " + std::to_string(g.below(3)) + "\n"; break;
            case 2: t += "    call g\n"; break;
            default: t += "    mov rdi, rax\n    call h\n"; break;
            }
        }
        if (i < n && g.chance(60)) {
            const int target = i + 1 + static_cast<int>(g.below(static_cast<std::uint64_t>(n - i)));
            t += "    jz L" + std::to_string(target) + "\n";
        } else if (i < n && g.chance(20)) {
            t += "    ret\n";
        }
    }
    return t + "    ret\n.endproc\n";
}

} // namespace

TEST_CASE("client call sites along paths") {
    const auto prog = fixture("client_start.nal");
    const auto a = analyze_procedure(prog, prog.procedures[0]);
    CHECK(a.flags.path_count == 3);
    REQUIRE(a.per_path.size() == 3);
    CHECK(rendered(a.per_path[0]) == std::vector<std::string>{"socket(2, 1, 0)", "printf(STR:cannot)", "close(RET)"});
    CHECK(rendered(a.per_path[2]) ==
          std::vector<std::string>{"socket(2, 1, 0)", "setsockopt(RET, 0, 10, STK, 4)", "connect(RET, ARG, 16)"});
    // Call sites follow control flow, not listing order.
    const auto listing = listing_order_callsites(prog, prog.procedures[0], {});
    std::vector<std::string> names;
    for (const auto& s : listing) names.push_back(s.callee.tokens.at(0));
    CHECK(names == std::vector<std::string>{"socket", "printf", "close", "connect", "printf", "setsockopt"});
}

TEST_CASE("callee subtokens and unknown callees") {
    const auto prog = parse_listing(".import getHTTPResponse_v2 1\n.proc q\n    ret\n.endproc\n"
                                    ".proc p\n    call getHTTPResponse_v2\n    call q\n    call rax\n    ret\n.endproc\n");
    const auto a = analyze_procedure(prog, prog.procedures[1]);
    REQUIRE(a.per_path.size() == 1);
    const auto& list = a.per_path[0];
    REQUIRE(list.size() == 3);
    CHECK(list[0].callee.tokens == subtokenize_name("getHTTPResponse_v2"));
    CHECK(list[0].callee.tokens == std::vector<std::string>{"get", "http", "response", "v", "2"});
    CHECK(list[1].callee.kind == CalleeKind::unknown_internal);
    CHECK(list[1].callee.tokens.empty());
    CHECK(list[2].callee.kind == CalleeKind::unknown_indirect);
    CHECK(list[2].values.empty());
    CHECK(a.flags.unknown_arity_calls == 1);
}

TEST_CASE("value rendering") {
    CHECK(render_value(AbstractTag::integer(-3)).to_string() == "-3");
    CHECK(render_value(AbstractTag::of(TagKind::stk)).to_string() == "STK");
    CHECK(render_value(AbstractTag::string("Usage: tool [opts]")).to_string() == "STR:usage");
    CHECK(render_value(AbstractTag::string("--verbose")).to_string() == "STR:verbose");
    CHECK(render_value(AbstractTag::string("")) == ArgValue::str("STR:"));
}

TEST_CASE("values differing by branch duplicate the call-site node") {
    const auto prog = fixture("reuse_flag.nal");
    const auto a = analyze_procedure(prog, prog.procedures[1]);
    const auto& g = a.graph;
    REQUIRE(g.nodes.size() == 6);
    CHECK(g.nodes[0].callee.kind == CalleeKind::entry);
    CHECK(g.nodes[1].callee.kind == CalleeKind::sink);
    CHECK(g.nodes[3].to_string() == "setsockopt(RET, 1, 2, STK, 4)");
    CHECK(g.nodes[4].to_string() == "setsockopt(RET, 0, 2, STK, 4)");
    CHECK(g.nodes[3].origin == g.nodes[4].origin);
    CHECK(g.nodes[5].callee.kind == CalleeKind::unknown_internal);
    const std::vector<std::pair<std::uint32_t, std::uint32_t>> edges{{0, 2}, {2, 3}, {2, 4}, {3, 5}, {4, 5}, {5, 1}};
    CHECK(g.edges == edges);
    CHECK(g.groups.at(g.nodes[3].origin) == std::vector<std::uint32_t>{3, 4});
    CHECK_FALSE(g.duplication_truncated);
}

TEST_CASE("duplication cap") {
    // Eleven routes each load a different rdi before one shared call.
    std::string t = ".import use 1\n.proc p\n";
    for (int k = 0; k < 10; ++k) t += ".bb c" + std::to_string(k) + "\n    jz s" + std::to_string(k) + "\n";
    t += ".bb last\n    mov rdi, 99\n    jmp site\n";
    for (int k = 0; k < 10; ++k) t += ".bb s" + std::to_string(k) + "\n    mov rdi, " + std::to_string(k) + "\n    jmp site\n";
    t += ".bb site\n    call use\n    ret\n.endproc\n";
    const auto prog = parse_listing(t);
    const auto a = analyze_procedure(prog, prog.procedures[0]);
    CHECK(a.flags.path_count == 11);
    CHECK(a.graph.nodes.size() == 2 + kDefaultDuplicationCap);
    CHECK(a.graph.duplication_truncated);
    CHECK(a.flags.duplication_truncated);
    CHECK(a.sequences.sequences.size() == 11);

    AnalysisOptions wide;
    wide.duplication_cap = 20;
    const auto b = analyze_procedure(prog, prog.procedures[0], wide);
    CHECK(b.graph.nodes.size() == 13);
    CHECK_FALSE(b.graph.duplication_truncated);
}

TEST_CASE("graph edges match consecutive call origins on random forward procedures") {
    for (std::uint64_t seed = 1; seed <= 150; ++seed) {
        oracle::Gen g(seed);
        const auto text = random_dag_proc(g);
        CAPTURE(text);
        const auto prog = parse_listing(text);
        AnalysisOptions opts;
        opts.duplication_cap = 1000;
        const auto a = analyze_procedure(prog, prog.procedures[0], opts);
        const auto& graph = a.graph;

        // Node set: distinct (origin, content) pairs over all paths.
        std::set<std::pair<Origin, std::vector<ArgValue>>> expected_nodes;
        for (const auto& list : a.per_path) {
            for (const auto& s : list) expected_nodes.emplace(s.origin, s.values);
        }
        std::set<std::pair<Origin, std::vector<ArgValue>>> got_nodes;
        for (std::size_t id = 2; id < graph.nodes.size(); ++id) {
            got_nodes.emplace(graph.nodes[id].origin, graph.nodes[id].values);
            if (id > 2) CHECK(graph.nodes[id - 1].origin <= graph.nodes[id].origin);
        }
        CHECK(got_nodes == expected_nodes);
        CHECK(got_nodes.size() == graph.nodes.size() - 2);

        // Origin-level edges: consecutive calls on some path, Entry first, Sink last.
        const Origin entry{0, 0}, sink{~0u, ~0u};
        std::set<std::pair<Origin, Origin>> expected_edges;
        std::set<std::pair<std::uint32_t, std::uint32_t>> path_edges;
        auto node_of = [&](const AugmentedCallSite& s) -> std::uint32_t {
            for (std::uint32_t id = 2; id < graph.nodes.size(); ++id) {
                if (graph.nodes[id].origin == s.origin && graph.nodes[id].values == s.values) return id;
            }
            return 0;
        };
        for (const auto& list : a.per_path) {
            Origin prev = entry;
            std::uint32_t prev_id = kGraphEntry;
            for (const auto& s : list) {
                expected_edges.emplace(prev, s.origin);
                path_edges.emplace(prev_id, node_of(s));
                prev = s.origin;
                prev_id = node_of(s);
            }
            expected_edges.emplace(prev, sink);
            path_edges.emplace(prev_id, kGraphSink);
        }
        std::set<std::pair<Origin, Origin>> got_edges;
        auto origin_of = [&](std::uint32_t id) {
            return id == kGraphEntry ? entry : id == kGraphSink ? sink : graph.nodes[id].origin;
        };
        for (auto [u, v] : graph.edges) got_edges.emplace(origin_of(u), origin_of(v));
        CHECK(got_edges == expected_edges);
        for (const auto& e : path_edges) CHECK(std::binary_search(graph.edges.begin(), graph.edges.end(), e));
        CHECK(std::is_sorted(graph.edges.begin(), graph.edges.end()));
        CHECK(std::adjacent_find(graph.edges.begin(), graph.edges.end()) == graph.edges.end());
    }
}

TEST_CASE("sequences: truncation, empties and repeats") {
    CallSiteList long_list;
    for (std::uint32_t k = 0; k < 75; ++k) long_list.push_back(site("f", {ArgValue::integer(k)}, {1, k}));
    const auto s = to_sequences({long_list});
    REQUIRE(s.sequences.size() == 1);
    CHECK(s.sequences[0].size() == 60);
    CHECK(s.sequences[0].back().values[0] == ArgValue::integer(59));
    CHECK(s.truncated);

    const CallSiteList a{site("f", {ArgValue::tag("ARG")}, {1, 3})};
    const CallSiteList b{site("f", {ArgValue::tag("ARG")}, {2, 9})};
    const CallSiteList c{site("f", {ArgValue::tag("RET")}, {1, 3})};
    const auto d = to_sequences({a, {}, b, c, a});
    REQUIRE(d.sequences.size() == 2);
    CHECK(d.sequences[0] == a);
    CHECK(d.sequences[1] == c);
    CHECK_FALSE(d.truncated);
    CHECK(to_sequences({}).sequences.empty());
}

TEST_CASE("sequence elements trace back to call instructions") {
    const auto prog = fixture("client_start.nal");
    const auto& proc = prog.procedures[0];
    const auto a = analyze_procedure(prog, proc);
    const auto cfg = build_cfg(proc);
    for (const auto& seq : a.sequences.sequences) {
        for (const auto& s : seq) {
            const auto& inst = cfg.instruction(s.origin.seq);
            CHECK(inst.is_call);
            CHECK(std::get<Label>(inst.operands[0]).name == s.callee.tokens.at(0));
            const auto& seqs = cfg.block(s.origin.block).seqs;
            CHECK(std::find(seqs.begin(), seqs.end(), s.origin.seq) != seqs.end());
        }
    }
}

TEST_CASE("analysis options") {
    const auto prog = fixture("client_start.nal");
    const auto& proc = prog.procedures[0];
    const auto base = analyze_procedure(prog, proc);

    SUBCASE("deterministic") {
        const auto again = analyze_procedure(prog, proc);
        CHECK(again.graph == base.graph);
        CHECK(again.sequences == base.sequences);
        CHECK(again.flags == base.flags);
    }
    SUBCASE("prefix cache does not change results") {
        AnalysisOptions off;
        off.prefix_cache = false;
        const auto b = analyze_procedure(prog, proc, off);
        CHECK(b.graph == base.graph);
        CHECK(b.sequences == base.sequences);
    }
    SUBCASE("no values") {
        AnalysisOptions nv;
        nv.values = false;
        const auto b = analyze_procedure(prog, proc, nv);
        for (const auto& n : b.graph.nodes) CHECK(n.values.empty());
        CHECK(b.graph.nodes.size() == base.graph.nodes.size());
        for (std::size_t k = 0; k < b.graph.nodes.size(); ++k) CHECK(b.graph.nodes[k].callee == base.graph.nodes[k].callee);
    }
    SUBCASE("listing order") {
        AnalysisOptions lo;
        lo.listing_order = true;
        const auto b = analyze_procedure(prog, proc, lo);
        REQUIRE(b.sequences.sequences.size() == 1);
        CHECK(b.sequences.sequences[0].size() == 6);
        CHECK(b.sequences.sequences[0][5].callee.tokens == std::vector<std::string>{"setsockopt"});
    }
    SUBCASE("sequence length option") {
        AnalysisOptions shortl;
        shortl.max_seq_len = 2;
        const auto b = analyze_procedure(prog, proc, shortl);
        for (const auto& s : b.sequences.sequences) CHECK(s.size() <= 2);
        CHECK(b.sequences.truncated);
    }
}

TEST_CASE("prefix cache is hit and transparent on random procedures") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        oracle::Gen g(seed * 31);
        const auto prog = parse_listing(random_dag_proc(g));
        AnalysisOptions off;
        off.prefix_cache = false;
        const auto a = analyze_procedure(prog, prog.procedures[0]);
        const auto b = analyze_procedure(prog, prog.procedures[0], off);
        CHECK(a.graph == b.graph);
        CHECK(a.sequences == b.sequences);
        CHECK(a.per_path == b.per_path);
    }
}
