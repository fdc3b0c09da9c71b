#include "acs/cfg_paths.hpp"
#include "acs/slicer.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <limits>
#include <memory>

using namespace acs;

namespace {

// A straight-line procedure analysed as one path.
struct Line {
    std::unique_ptr<Program> prog;
    std::unique_ptr<PathAnalysis> path;
    SliceContext ctx;
    std::size_t call = 0;                  // position of the last call

    explicit Line(const std::string& body, const std::string& header = "") {
        prog = std::make_unique<Program>(parse_listing(".import g 6\n.import h 0\n.string sdata \"hello\"\n"
                                                       ".string long_text \"" +
                                                       std::string(40, 'x') + "\"\n" + header + ".proc f" +
                                                       " args=1\n" + body + "    call g\n    ret\n.endproc\n"));
        const auto& proc = prog->procedures.back();
        std::vector<const Instruction*> insts;
        for (const auto& b : proc.blocks) {
            for (const auto& i : b.instructions) insts.push_back(&i);
        }
        for (std::size_t k = 0; k < insts.size(); ++k) {
            if (insts[k]->is_call) call = k;
        }
        path = std::make_unique<PathAnalysis>(std::move(insts));
        ctx = {prog.get(), &proc};
    }

    Propagation value(Reg r, bool* overflow = nullptr) const { return argument_value(*path, call, r, ctx, overflow); }
    SliceTree raw(Reg r) const { return slice_register(*path, call, r, ctx); }
};

std::string tag(const Line& l, Reg r) { return l.value(r).tag.to_string(); }

} // namespace

TEST_CASE("client rsi slice follows register, memory and register links") {
    const auto prog = parse_listing(oracle::slurp(std::string(ACS_FIXTURE_DIR) + "/client_start.nal"));
    const auto& proc = prog.procedures.at(0);
    const auto cfg = build_cfg(proc);
    const auto paths = enumerate_paths(cfg);
    const std::vector<BlockId> main_path{0, 1, 5, 3, 6, 7};
    const Path* chosen = nullptr;
    for (const auto& p : paths.paths) {
        if (p.blocks == main_path) chosen = &p;
    }
    REQUIRE(chosen);
    std::vector<const Instruction*> insts;
    for (auto s : chosen->seqs) insts.push_back(&cfg.instruction(s));
    const PathAnalysis pa(insts);
    const SliceContext ctx{&prog, &proc};
    std::size_t connect = 0;
    for (std::size_t k = 0; k < pa.size(); ++k) {
        if (pa.at(k).is_call && std::get<Label>(pa.at(k).operands[0]).name == "connect") connect = k;
    }
    REQUIRE(connect > 0);

    const auto tree = slice_register(pa, connect, Reg::rsi, ctx);
    // sink <- mov rsi, rdi <- mov rdi, [rbp-50h] <- mov [rbp-50h], rdi <- ARG
    const auto& sink = tree.root();
    REQUIRE(sink.children.size() == 1);
    const auto& copy = tree.nodes[sink.children[0].target];
    REQUIRE(copy.inst);
    CHECK(print_instruction(*copy.inst) == "mov rsi, rdi");
    REQUIRE(copy.children.size() == 1);
    const auto& load = tree.nodes[copy.children[0].target];
    REQUIRE(load.inst);
    CHECK(print_instruction(*load.inst) == "mov rdi, [rbp - 80]");
    const SliceNode* store = nullptr;
    for (const auto& e : load.children) {
        if (e.role == EdgeRole::memory) store = &tree.nodes[e.target];
    }
    REQUIRE(store);
    REQUIRE(store->inst);
    CHECK(print_instruction(*store->inst) == "mov [rbp - 80], rdi");
    bool reaches_arg = false;
    for (const auto& e : store->children) {
        if (e.role == EdgeRole::data) reaches_arg = tree.nodes[e.target].kind == SliceNodeKind::arg_leaf;
    }
    CHECK(reaches_arg);

    CHECK(argument_value(pa, connect, Reg::rsi, ctx).tag == AbstractTag::of(TagKind::arg));
    CHECK(argument_value(pa, connect, Reg::rdx, ctx).tag == AbstractTag::integer(16));
    CHECK(argument_value(pa, connect, Reg::rdi, ctx).tag == AbstractTag::of(TagKind::ret));
}

TEST_CASE("slice edges point to earlier positions") {
    const Line l("    push rbp\n    mov rbp, rsp\n    mov [rbp-8], rdi\n    mov rax, [rbp-8]\n    add rax, 4\n"
                 "    mov rsi, rax\n    lea rdx, [rbp-10h]\n");
    for (Reg r : kArgRegisters) {
        const auto tree = l.raw(r);
        for (const auto& n : tree.nodes) {
            for (const auto& e : n.children) {
                const auto& child = tree.nodes[e.target];
                if (child.kind == SliceNodeKind::instruction) CHECK(child.pos < n.pos);
            }
        }
    }
}

TEST_CASE("no producer gives EMPTY") {
    const Line l("    nop\n");
    const auto tree = l.raw(Reg::rdx);
    REQUIRE(tree.root().children.size() == 1);
    CHECK(tree.nodes[tree.root().children[0].target].kind == SliceNodeKind::empty_leaf);
    CHECK(tag(l, Reg::rdx) == "EMPTY");
    CHECK(tag(l, Reg::r10) == "EMPTY");
}

TEST_CASE("constant folding") {
    CHECK(tag(Line("    xor edi, edi\n    inc edi\n"), Reg::rdi) == "1");
    CHECK(tag(Line("    mov rsi, 5\n"), Reg::rsi) == "5");
    CHECK(tag(Line("    mov rdx, 2\n    add rdx, 3\n"), Reg::rdx) == "5");
    CHECK(tag(Line("    mov rax, 7\n    mov rcx, rax\n    shl rcx, 2\n"), Reg::rcx) == "28");
    CHECK(tag(Line("    mov rax, 3\n    imul rdx, rax, 6\n"), Reg::rdx) == "18");
    CHECK(tag(Line("    sub r8, r8\n"), Reg::r8) == "0");
    CHECK(tag(Line("    push 9\n    pop r9\n"), Reg::r9) == "9");

    const auto before = Line("    mov rdx, 2\n    add rdx, 3\n").raw(Reg::rdx);
    const Line l("    mov rdx, 2\n    add rdx, 3\n");
    const auto after = reoptimize_slice(before, l.ctx);
    CHECK(before.instruction_count() == 2);
    CHECK(after.instruction_count() == 0);
    CHECK(after.nodes[after.root().children[0].target].kind == SliceNodeKind::constant_leaf);
}

TEST_CASE("folded address drops the address link") {
    const Line l("    mov rbx, 1000h\n    mov rsi, [rbx+8]\n");
    const auto tree = reoptimize_slice(l.raw(Reg::rsi), l.ctx);
    const auto& load = tree.nodes[tree.root().children[0].target];
    for (const auto& e : load.children) CHECK(e.role != EdgeRole::address);
    CHECK(tag(l, Reg::rsi) == "GLOBAL");
}

TEST_CASE("overflow wraps and is flagged") {
    bool overflow = false;
    const Line l("    mov rdi, 9223372036854775807\n    add rdi, 1\n");
    const auto v = l.value(Reg::rdi, &overflow);
    CHECK(overflow);
    CHECK(v.tag == AbstractTag::integer(std::numeric_limits<std::int64_t>::min()));
    bool none = true;
    Line("    mov rdi, 1\n").value(Reg::rdi, &none);
    CHECK_FALSE(none);
}

TEST_CASE("folding agrees with an interpreter on random straight-line code") {
    static const char* regs[] = {"rax", "rbx", "rcx"};
    static const char* ops[] = {"mov", "add", "sub", "xor", "and", "or", "imul", "shl", "shr", "inc", "dec", "neg", "not"};
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        oracle::Gen g(seed);
        oracle::Interp interp;
        std::string body;
        auto emit = [&](const std::string& line) {
            body += "    " + line + "\n";
            interp.run(line);
        };
        for (auto* r : regs) emit(std::string("mov ") + r + ", " + std::to_string(static_cast<std::int64_t>(g.below(2000)) - 1000));
        const int n = 1 + static_cast<int>(g.below(12));
        for (int i = 0; i < n; ++i) {
            const std::string op = ops[g.below(std::size(ops))];
            const std::string dst = regs[g.below(3)];
            if (op == "inc" || op == "dec" || op == "neg" || op == "not") {
                emit(op + " " + dst);
            } else if (op == "shl" || op == "shr") {
                emit(op + " " + dst + ", " + std::to_string(g.below(8)));
            } else if (g.chance(50)) {
                emit(op + " " + dst + ", " + regs[g.below(3)]);
            } else {
                emit(op + " " + dst + ", " + std::to_string(static_cast<std::int64_t>(g.below(200)) - 100));
            }
        }
        emit("mov rdi, rax");
        CAPTURE(body);
        const Line l(body);
        CHECK(l.value(Reg::rdi).tag == AbstractTag::integer(interp.get("rax")));
        const auto c = constant_at(*l.path, l.call, Reg::rdi, l.ctx);
        REQUIRE(c);
        CHECK(std::get<std::int64_t>(*c) == interp.get("rax"));
    }
}

TEST_CASE("abstract tags") {
    SUBCASE("incoming argument") { CHECK(tag(Line("    mov rsi, rdi\n"), Reg::rsi) == "ARG"); }
    SUBCASE("register beyond declared args is not an argument") {
        CHECK(tag(Line("    mov rsi, rcx\n"), Reg::rsi) == "EMPTY");
    }
    SUBCASE("stack address") {
        CHECK(tag(Line("    push rbp\n    mov rbp, rsp\n    lea rcx, [rbp-88h]\n"), Reg::rcx) == "STK");
    }
    SUBCASE("call result") { CHECK(tag(Line("    call h\n    mov rdi, rax\n"), Reg::rdi) == "RET"); }
    SUBCASE("call result through a stack slot") {
        CHECK(tag(Line("    mov rbp, rsp\n    call h\n    mov [rbp-8], rax\n    mov rdi, [rbp-8]\n"), Reg::rdi) == "RET");
    }
    SUBCASE("argument through a stack slot beats STK") {
        CHECK(tag(Line("    mov rbp, rsp\n    mov [rbp-8], rdi\n    mov rsi, [rbp-8]\n"), Reg::rsi) == "ARG");
    }
    SUBCASE("global memory") {
        CHECK(tag(Line("    mov rdx, [rip+gcount]\n"), Reg::rdx) == "GLOBAL");
        CHECK(tag(Line("    mov rdx, qword ptr [0x601040]\n"), Reg::rdx) == "GLOBAL");
    }
    SUBCASE("concrete beats everything") {
        CHECK(tag(Line("    mov rdx, 3\n    add rdx, rdi\n"), Reg::rdx) == "3");
    }
    SUBCASE("string literal") {
        const auto v = Line("    lea rdi, [rip+sdata]\n").value(Reg::rdi).tag;
        CHECK(v == AbstractTag::string("hello"));
        CHECK(Line("    mov rdi, sdata\n").value(Reg::rdi).tag == AbstractTag::string("hello"));
    }
    SUBCASE("long string is truncated") {
        const auto v = Line("    mov rdi, long_text\n").value(Reg::rdi).tag;
        REQUIRE(v.is_string());
        CHECK(std::get<std::string>(v.concrete) == std::string(kMaxConcreteString, 'x'));
    }
    SUBCASE("push and pop pair through the stack") {
        CHECK(tag(Line("    push rdi\n    push 4\n    pop rdx\n    pop rsi\n"), Reg::rsi) == "ARG");
        CHECK(tag(Line("    push rdi\n    push 4\n    pop rdx\n    pop rsi\n"), Reg::rdx) == "4");
    }
}

TEST_CASE("conflicting constants keep the earlier one and flag it") {
    SliceTree t;
    t.reg = Reg::rdi;
    t.call_pos = 9;
    SliceNode sink;
    sink.kind = SliceNodeKind::sink;
    sink.pos = 9;
    sink.children = {{EdgeRole::data, Reg::rdi, 1}, {EdgeRole::data, Reg::rsi, 2}};
    SliceNode late;
    late.kind = SliceNodeKind::constant_leaf;
    late.pos = 5;
    late.value = std::int64_t{7};
    SliceNode early = late;
    early.pos = 2;
    early.value = std::int64_t{3};
    t.nodes = {sink, late, early};
    const auto p = assign_and_propagate(t, {});
    CHECK(p.tag == AbstractTag::integer(3));
    CHECK(p.concrete_conflict);
}

TEST_CASE("propagation equals the maximum tag over reachable leaves") {
    const TagKind kinds[] = {TagKind::empty, TagKind::stk, TagKind::global, TagKind::arg};
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        oracle::Gen g(seed);
        const auto n = 2 + static_cast<std::uint32_t>(g.below(14));
        SliceTree t;
        t.nodes.resize(n);
        t.nodes[0].kind = SliceNodeKind::sink;
        t.nodes[0].pos = n;
        std::vector<int> leaf_kind(n, -1);
        for (std::uint32_t id = 1; id < n; ++id) {
            auto& node = t.nodes[id];
            node.pos = n - id;
            if (g.chance(50) || id == n - 1) {
                const auto k = g.below(std::size(kinds) + 1);
                if (k == std::size(kinds)) {
                    node.kind = SliceNodeKind::instruction;
                    Instruction call;
                    call.mnemonic = "call";
                    call.is_call = true;
                    node.inst = call;
                    leaf_kind[id] = static_cast<int>(TagKind::ret);
                } else {
                    node.kind = kinds[k] == TagKind::empty  ? SliceNodeKind::empty_leaf
                                : kinds[k] == TagKind::stk  ? SliceNodeKind::stack_leaf
                                : kinds[k] == TagKind::global ? SliceNodeKind::global_leaf
                                                              : SliceNodeKind::arg_leaf;
                    leaf_kind[id] = static_cast<int>(kinds[k]);
                }
            } else {
                node.kind = SliceNodeKind::instruction;
                Instruction op;
                op.mnemonic = "add";
                node.inst = op;
            }
        }
        // Edges only go to larger ids, so the graph is a DAG rooted at the sink.
        for (std::uint32_t id = 0; id + 1 < n; ++id) {
            if (id != 0 && leaf_kind[id] >= 0) continue;
            const auto fan = 1 + g.below(3);
            for (std::uint64_t f = 0; f < fan; ++f) {
                const auto to = id + 1 + static_cast<std::uint32_t>(g.below(n - id - 1));
                t.nodes[id].children.push_back({EdgeRole::data, Reg::rax, to});
            }
        }
        std::vector<bool> seen(n, false);
        int expected = -1;
        std::vector<std::uint32_t> stack{0};
        while (!stack.empty()) {
            const auto id = stack.back();
            stack.pop_back();
            if (seen[id]) continue;
            seen[id] = true;
            expected = std::max(expected, leaf_kind[id]);
            for (const auto& e : t.nodes[id].children) stack.push_back(e.target);
        }
        CAPTURE(seed);
        const auto got = assign_and_propagate(t, {});
        CHECK(static_cast<int>(got.tag.kind) == std::max(expected, static_cast<int>(TagKind::empty)));
        CHECK_FALSE(got.concrete_conflict);
    }
}
