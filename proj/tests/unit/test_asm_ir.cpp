#include "acs/asm_ir.hpp"
#include "acs/error.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace acs;

namespace {

Program fixture(const std::string& name) {
    return parse_listing(oracle::slurp(std::string(ACS_FIXTURE_DIR) + "/" + name));
}

Instruction single(const std::string& text) {
    const auto p = parse_listing(".proc f\n" + text + "\n.endproc\n");
    return p.procedures.at(0).blocks.at(0).instructions.at(0);
}

MemExpr mem(std::optional<Reg> base, std::int64_t disp) {
    MemExpr m;
    m.base = base;
    m.disp = disp;
    return m;
}

std::size_t parse_error_line(const std::string& text) {
    try {
        parse_listing(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST_CASE("minimal listing") {
    const auto p = parse_listing(".proc f\n    mov rsi, rdi\n    ret\n.endproc\n");
    REQUIRE(p.procedures.size() == 1);
    CHECK(p.procedures[0].blocks.size() == 1);
    CHECK(p.procedures[0].instruction_count() == 2);
    CHECK(p.procedures[0].blocks[0].instructions[1].is_terminator);
}

TEST_CASE("client fixture marks call connect as a call") {
    const auto p = fixture("client_start.nal");
    const auto& proc = p.procedures.at(0);
    bool found = false;
    for (const auto& b : proc.blocks) {
        for (const auto& i : b.instructions) {
            if (i.mnemonic == "call" && std::get<Label>(i.operands.at(0)).name == "connect") {
                found = true;
                CHECK(i.is_call);
                CHECK_FALSE(i.is_terminator);
            }
        }
    }
    CHECK(found);
    REQUIRE(p.find_import("connect"));
    CHECK(p.find_import("connect")->arity == 3);
    CHECK_FALSE(p.find_import("printf")->arity.has_value());
}

TEST_CASE("instruction count equals instruction lines") {
    const std::string text = oracle::slurp(std::string(ACS_FIXTURE_DIR) + "/client_start.nal");
    std::istringstream in(text);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(' ');
        if (start == std::string::npos || line[start] == '#' || line[start] == '.') continue;
        ++lines;
    }
    CHECK(fixture("client_start.nal").procedures.at(0).instruction_count() == lines);
}

TEST_CASE("sub-registers canonicalize in operands") {
    const auto i = single("mov eax, 5");
    CHECK(std::get<Reg>(i.operands[0]) == Reg::rax);
    CHECK(std::get<Imm>(i.operands[1]).value == 5);
    CHECK(std::get<Reg>(single("mov r8d, r9w").operands[1]) == Reg::r9);
}

TEST_CASE("canonicalize_register") {
    CHECK(canonicalize_register("eax") == Reg::rax);
    CHECK(canonicalize_register("rax") == Reg::rax);
    CHECK(canonicalize_register("r8d") == Reg::r8);
    CHECK(canonicalize_register("EAX") == Reg::rax);
    CHECK_THROWS_AS(canonicalize_register("xmm0"), Error);
    CHECK_THROWS_AS(canonicalize_register("r16"), Error);
    CHECK_FALSE(try_canonicalize_register("foo").has_value());

    SUBCASE("alias table oracle") {
        for (const auto& [token, family] : oracle::register_aliases()) {
            CAPTURE(token);
            CHECK(reg_name(canonicalize_register(token)) == family);
        }
    }
}

TEST_CASE("effect sets of the three slice-table instructions") {
    SUBCASE("mov rax, 5") {
        const auto e = effect_sets(single("mov rax, 5"));
        CHECK(e.v_read == std::set<ReadValue>{Imm{5}});
        CHECK(e.v_write == std::set<Reg>{Reg::rax});
        CHECK(e.p_read.empty());
        CHECK(e.p_write.empty());
    }
    SUBCASE("mov rax, [rbx+5]") {
        const auto e = effect_sets(single("mov rax, [rbx+5]"));
        CHECK(e.v_read == std::set<ReadValue>{Reg::rbx});
        CHECK(e.v_write == std::set<Reg>{Reg::rax});
        CHECK(e.p_read == std::set<MemExpr>{mem(Reg::rbx, 5)});
        CHECK(e.p_write.empty());
    }
    SUBCASE("call rcx") {
        const auto e = effect_sets(single("call rcx"));
        CHECK(e.v_read == std::set<ReadValue>{Reg::rcx});
        CHECK(e.v_write == std::set<Reg>{Reg::rax});
        CHECK(e.p_read == std::set<MemExpr>{mem(Reg::rcx, 0)});
        CHECK(e.p_write.empty());
    }
    SUBCASE("nop") { CHECK(effect_sets(single("nop")).empty()); }
}

TEST_CASE("effect sets of other forms") {
    SUBCASE("store") {
        const auto e = effect_sets(single("mov [rbp-50h], rdi"));
        CHECK(e.v_read == std::set<ReadValue>{Reg::rbp, Reg::rdi});
        CHECK(e.v_write.empty());
        CHECK(e.p_write == std::set<MemExpr>{mem(Reg::rbp, -0x50)});
    }
    SUBCASE("lea reads address registers without dereferencing") {
        const auto e = effect_sets(single("lea rcx, [rbp-88h]"));
        CHECK(e.v_read == std::set<ReadValue>{Reg::rbp});
        CHECK(e.v_write == std::set<Reg>{Reg::rcx});
        CHECK(e.p_read.empty());
    }
    SUBCASE("read-modify-write") {
        const auto e = effect_sets(single("inc rax"));
        CHECK(e.v_read.count(Reg::rax));
        CHECK(e.v_write.count(Reg::rax));
    }
    SUBCASE("compare writes nothing") {
        const auto e = effect_sets(single("cmp rax, rbx"));
        CHECK(e.v_write.empty());
        CHECK(e.v_read == std::set<ReadValue>{Reg::rax, Reg::rbx});
    }
    SUBCASE("push and pop use a stack slot") {
        const auto push = effect_sets(single("push rbx"));
        REQUIRE(push.p_write.size() == 1);
        CHECK(push.p_write.begin()->is_stack_slot());
        const auto pop = effect_sets(single("pop rsi"));
        CHECK(pop.v_write == std::set<Reg>{Reg::rsi});
        REQUIRE(pop.p_read.size() == 1);
        CHECK(pop.p_read.begin()->is_stack_slot());
    }
    SUBCASE("unknown mnemonic falls back conservatively") {
        const auto e = effect_sets(single("cmovz rax, [rbx+8]"));
        CHECK(e.v_read.count(Reg::rbx));
        CHECK(e.v_write == std::set<Reg>{Reg::rax});
        CHECK(e.p_read.empty());
        CHECK(e.p_write.empty());
    }
    SUBCASE("control flow has no effects") {
        const auto p = parse_listing(".proc f\n.bb a\n jz a\n.bb b\n jmp a\n.bb c\n ret\n.endproc\n");
        for (const auto& b : p.procedures[0].blocks) {
            for (const auto& i : b.instructions) CHECK(effect_sets(i).empty());
        }
    }
    SUBCASE("call by label writes rax only") {
        const auto p = parse_listing(".import exit 1\n.proc f\n call exit\n.endproc\n");
        const auto e = effect_sets(p.procedures[0].blocks[0].instructions[0]);
        CHECK(e.v_read.empty());
        CHECK(e.v_write == std::set<Reg>{Reg::rax});
    }
}

TEST_CASE("memory operand spellings fold to one expression") {
    const auto a = std::get<MemExpr>(single("mov rax, [rbp-58h]").operands[1]);
    const auto b = std::get<MemExpr>(single("mov rax, qword ptr [rbp - 0x58]").operands[1]);
    const auto c = std::get<MemExpr>(single("mov rax, [rbp-60h+8]").operands[1]);
    CHECK(a == b);
    CHECK(a == c);
    const auto idx = std::get<MemExpr>(single("mov rax, [rbx+rcx*8+16]").operands[1]);
    CHECK(idx.index == Reg::rcx);
    CHECK(idx.scale == 8);
    CHECK(idx.disp == 16);
}

TEST_CASE("parse errors carry line and column") {
    CHECK(parse_error_line(".proc f\n    mov rax, 5\n    mov rax, %%\n.endproc\n") == 3);
    CHECK(parse_error_line(".proc f\n    mov xmm0, rax\n.endproc\n") == 2);
    CHECK(parse_error_line(".proc f\n    jmp nowhere\n.endproc\n") == 2);
    CHECK(parse_error_line(".proc f\n.bb a\n    nop\n.bb a\n    ret\n.endproc\n") == 4);
    CHECK(parse_error_line(".proc f\n    mov rax, [rbx*3]\n.endproc\n") == 2);
    CHECK(parse_error_line(".proc f\n    call missing\n.endproc\n") == 2);
    CHECK(parse_error_line(".proc f args=7\n.endproc\n") == 1);
    try {
        parse_listing(".proc f\n    mov rax, 12z\n.endproc\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 14);
    }
}

TEST_CASE("string literals and references") {
    const auto p = parse_listing(".string msg \"hi\\tthere\\n\"\n.proc f\n    mov rdi, msg\n    ret\n.endproc\n");
    REQUIRE(p.find_string("msg"));
    CHECK(p.find_string("msg")->bytes == "hi\tthere\n");
    CHECK(std::holds_alternative<StringRef>(p.procedures[0].blocks[0].instructions[0].operands[1]));
}

TEST_CASE("instructions after a terminator open a new block") {
    const auto p = parse_listing(".proc f\n    jmp done\n    nop\n.bb done\n    ret\n.endproc\n");
    CHECK(p.procedures[0].blocks.size() == 3);
}

namespace {

std::string random_operand(oracle::Gen& g, bool dest) {
    static const char* regs[] = {"rax", "eax", "bx", "cl", "rdx", "esi", "rdi", "r8", "r9d", "r10w", "r12", "rbp"};
    const auto reg = [&] { return std::string(regs[g.below(std::size(regs))]); };
    switch (g.below(dest ? 2 : 4)) {
    case 0: return reg();
    case 1: {
        std::string m = "[";
        if (g.chance(80)) m += "rbp";
        else m += "rip + gvar";
        if (g.chance(30)) m += " + rcx*" + std::to_string(1 << g.below(4));
        const auto disp = static_cast<std::int64_t>(g.below(512)) - 256;
        if (disp) m += (disp < 0 ? " - " : " + ") + std::to_string(disp < 0 ? -disp : disp);
        return m + "]";
    }
    case 2: return std::to_string(static_cast<std::int64_t>(g.below(100000)) - 50000);
    default: return "s1";
    }
}

std::string random_listing(oracle::Gen& g) {
    std::string t = ".import ext 2\n.import var ?\n.string s1 \"a;b#c\\\"\\x01\"\n";
    const int procs = 1 + static_cast<int>(g.below(3));
    for (int p = 0; p < procs; ++p) {
        t += ".proc p" + std::to_string(p) + (g.chance(50) ? " args=" + std::to_string(g.below(7)) : "") + "\n";
        const int blocks = 1 + static_cast<int>(g.below(4));
        for (int b = 0; b < blocks; ++b) {
            t += ".bb b" + std::to_string(b) + "\n";
            const int n = static_cast<int>(g.below(6));
            for (int i = 0; i < n; ++i) {
                switch (g.below(6)) {
                case 0: t += "    mov " + random_operand(g, true) + ", " + random_operand(g, false) + "\n"; break;
                case 1: t += "    add rax, " + random_operand(g, false) + "\n"; break;
                case 2: t += "    lea rsi, [rbp-" + std::to_string(8 * (1 + g.below(9))) + "]\n"; break;
                case 3: t += "    call " + std::string(g.chance(50) ? "ext" : "var") + "\n"; break;
                case 4: t += "    push " + random_operand(g, true) + "\n"; break;
                default: t += "    nop\n"; break;
                }
            }
            if (g.chance(40)) t += "    jnz b" + std::to_string(g.below(static_cast<std::uint64_t>(blocks))) + "\n";
        }
        t += "    ret\n.endproc\n";
    }
    return t;
}

} // namespace

TEST_CASE("print/parse round trip") {
    for (const char* name : {"client_start.nal", "reuse_flag.nal"}) {
        const auto p = fixture(name);
        CHECK(parse_listing(print_listing(p)) == p);
    }
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        oracle::Gen g(seed);
        const auto text = random_listing(g);
        CAPTURE(text);
        const auto p = parse_listing(text);
        const auto printed = print_listing(p);
        CHECK(parse_listing(printed) == p);
        CHECK(print_listing(parse_listing(printed)) == printed);
    }
}

TEST_CASE("effect sets are pure and never print sub-registers") {
    static const std::set<std::string> subs = {"eax", "ebx", "ecx", "edx", "esi", "edi", "r8d", "r9d",
                                               "ax", "bx", "cl", "r10w", "ebp"};
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        oracle::Gen g(seed);
        const auto p = parse_listing(random_listing(g));
        for (const auto& proc : p.procedures) {
            for (const auto& b : proc.blocks) {
                for (const auto& i : b.instructions) {
                    const auto e = effect_sets(i);
                    CHECK(e == effect_sets(i));
                    for (const auto& m : e.p_write) {
                        std::istringstream words(print_operand(m));
                        std::string w;
                        while (words >> w) {
                            while (!w.empty() && (w.front() == '[')) w.erase(w.begin());
                            while (!w.empty() && (w.back() == ']')) w.pop_back();
                            CHECK_FALSE(subs.count(w));
                        }
                    }
                }
            }
        }
    }
}
