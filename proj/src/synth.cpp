#include "acs/corpus.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace acs {

namespace {

enum class Src { arg, ret, ret_plus, constant, str, local, global };

struct ArgSpec {
    Src kind = Src::constant;
    std::int64_t a = 0;                // arg index, step index or constant
    std::int64_t b = 0;                // ret_plus addend
    std::string text;                  // string bytes or global symbol
};

ArgSpec A(int i) { return {Src::arg, i, 0, {}}; }
ArgSpec R(int step) { return {Src::ret, step, 0, {}}; }
ArgSpec RP(int step, std::int64_t add) { return {Src::ret_plus, step, add, {}}; }
ArgSpec C(std::int64_t v) { return {Src::constant, v, 0, {}}; }
ArgSpec S(std::string s) { return {Src::str, 0, 0, std::move(s)}; }
ArgSpec L() { return {Src::local, 0, 0, {}}; }
ArgSpec G(std::string sym) { return {Src::global, 0, 0, std::move(sym)}; }

/// `api` empty means an indirect call through incoming argument `indirect_arg`.
struct Step {
    std::string api;
    std::vector<ArgSpec> args;
    int indirect_arg = -1;
};

struct Template {
    std::string name;
    int args = 0;
    std::vector<Step> steps;
};

const std::map<std::string, int>& api_arity() {
    static const std::map<std::string, int> table = {
        {"open", 3},    {"read", 3},    {"write", 3},   {"close", 1},   {"lseek", 3},  {"fopen", 2},
        {"fread", 4},   {"fwrite", 4},  {"fclose", 1},  {"socket", 3},  {"connect", 3}, {"bind", 3},
        {"listen", 2},  {"accept", 3},  {"setsockopt", 5}, {"send", 4}, {"recv", 4},   {"strlen", 1},
        {"malloc", 1},  {"strcpy", 2},  {"strcmp", 2},  {"memcpy", 3},  {"memset", 3},  {"kill", 2},
        {"fork", 0},    {"execve", 3},  {"waitpid", 3}, {"getpid", 0},  {"exit", 1},    {"puts", 1},
        {"free", 1},    {"unlink", 1},  {"chmod", 2},
    };
    return table;
}

const std::vector<Template>& templates() {
    static const std::vector<Template> t = {
        {"read_file", 1, {{"open", {A(0), C(0), C(0)}}, {"read", {R(0), L(), C(4096)}}, {"close", {R(0)}}}},
        {"write_file", 3, {{"open", {A(0), C(577), C(420)}}, {"write", {R(0), A(1), A(2)}}, {"close", {R(0)}}}},
        {"append_file", 3, {{"open", {A(0), C(1089), C(420)}}, {"write", {R(0), A(1), A(2)}}, {"close", {R(0)}}}},
        {"copy_file", 2, {{"open", {A(0), C(0), C(0)}}, {"open", {A(1), C(577), C(420)}},
                          {"read", {R(0), L(), C(4096)}}, {"write", {R(1), L(), C(4096)}},
                          {"close", {R(0)}}, {"close", {R(1)}}}},
        {"get_file_size", 1, {{"open", {A(0), C(0), C(0)}}, {"lseek", {R(0), C(0), C(2)}}, {"close", {R(0)}}}},
        {"rewind_file", 1, {{"lseek", {A(0), C(0), C(0)}}}},
        {"delete_file", 1, {{"unlink", {A(0)}}}},
        {"make_executable", 1, {{"chmod", {A(0), C(493)}}}},
        {"load_config", 1, {{"fopen", {A(0), S("r")}}, {"fread", {L(), C(1), C(512), R(0)}}, {"fclose", {R(0)}}}},
        {"save_config", 3, {{"fopen", {A(0), S("w")}}, {"fwrite", {A(1), C(1), A(2), R(0)}}, {"fclose", {R(0)}}}},
        {"connect_socket", 1, {{"socket", {C(2), C(1), C(0)}}, {"connect", {R(0), A(0), C(16)}}}},
        {"create_server_socket", 1, {{"socket", {C(2), C(1), C(0)}}, {"setsockopt", {R(0), C(1), C(2), L(), C(4)}},
                                     {"bind", {R(0), A(0), C(16)}}, {"listen", {R(0), C(128)}}}},
        {"create_udp_socket", 1, {{"socket", {C(2), C(2), C(0)}}, {"bind", {R(0), A(0), C(16)}}}},
        {"accept_client", 1, {{"accept", {A(0), L(), L()}}, {"setsockopt", {R(0), C(6), C(1), L(), C(4)}}}},
        {"send_message", 3, {{"send", {A(0), A(1), A(2), C(0)}}}},
        {"send_urgent_message", 3, {{"send", {A(0), A(1), A(2), C(1)}}}},
        {"receive_message", 1, {{"recv", {A(0), L(), C(1024), C(0)}}}},
        {"peek_message", 1, {{"recv", {A(0), L(), C(1024), C(2)}}}},
        {"duplicate_string", 1, {{"strlen", {A(0)}}, {"malloc", {RP(0, 1)}}, {"strcpy", {R(1), A(0)}}}},
        {"compare_strings", 2, {{"strcmp", {A(0), A(1)}}}},
        {"is_help_option", 1, {{"strcmp", {A(0), S("--help")}}}},
        {"is_verbose_option", 1, {{"strcmp", {A(0), S("--verbose")}}}},
        {"copy_buffer", 2, {{"malloc", {A(1)}}, {"memcpy", {R(0), A(0), A(1)}}}},
        {"clear_buffer", 2, {{"memset", {A(0), C(0), A(1)}}}},
        {"fill_buffer", 2, {{"memset", {A(0), C(255), A(1)}}}},
        {"release_buffer", 1, {{"free", {A(0)}}}},
        {"kill_process", 1, {{"kill", {A(0), C(9)}}}},
        {"terminate_process", 1, {{"kill", {A(0), C(15)}}}},
        {"interrupt_process", 1, {{"kill", {A(0), C(2)}}}},
        {"spawn_process", 2, {{"fork", {}}, {"execve", {A(0), A(1), G("environ")}}, {"waitpid", {R(0), L(), C(0)}}}},
        {"wait_child", 1, {{"waitpid", {A(0), L(), C(0)}}}},
        {"poll_child", 1, {{"waitpid", {A(0), L(), C(1)}}}},
        {"get_process_id", 0, {{"getpid", {}}}},
        {"signal_self", 1, {{"getpid", {}}, {"kill", {R(0), A(0)}}}},
        {"exit_with_error", 0, {{"exit", {C(1)}}}},
        {"exit_success", 0, {{"exit", {C(0)}}}},
        {"print_banner", 0, {{"puts", {S("welcome")}}}},
        {"print_message", 1, {{"puts", {A(0)}}}},
        {"run_callback", 1, {{"", {}, 0}}},
    };
    return t;
}

/// Uniform integers from mt19937_64 with rejection; stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r = gen_();
        while (r >= limit) r = gen_();
        return r % n;
    }
    bool coin(std::uint64_t num = 1, std::uint64_t den = 2) { return below(den) < num; }
    template <class T> void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }

private:
    std::mt19937_64 gen_;
};

const char* name32(Reg r) {
    switch (r) {
    case Reg::rax: return "eax";
    case Reg::rdi: return "edi";
    case Reg::rsi: return "esi";
    case Reg::rdx: return "edx";
    case Reg::rcx: return "ecx";
    case Reg::r8: return "r8d";
    case Reg::r9: return "r9d";
    case Reg::r10: return "r10d";
    case Reg::r11: return "r11d";
    default: return nullptr;
    }
}

std::string reg(Reg r) { return std::string(reg_name(r)); }

std::string slot(int off) { return "[rbp-0x" + [&] {
    std::ostringstream o;
    o << std::hex << off;
    return o.str();
}() + "]"; }

/// Where a value lives across calls: a stack slot or a callee-saved register.
struct Home {
    std::optional<Reg> reg;
    int offset = 0;
    std::string operand() const { return reg ? std::string(reg_name(*reg)) : slot(offset); }
};

struct Block {
    std::string label;
    std::vector<std::string> lines;
    std::string fallthrough;           // logical successor when the block does not end in jmp/ret
};

class ProcedureWriter {
public:
    ProcedureWriter(const Template& t, Rng& rng, bool perturb, std::map<std::string, std::string>& strings)
        : t_(t), rng_(rng), perturb_(perturb), strings_(strings) {}

    std::string write() {
        std::vector<int> offsets;
        for (int o = 8; o <= 0x78; o += 8) offsets.push_back(o);
        if (perturb_) rng_.shuffle(offsets);
        std::vector<Reg> saved = {Reg::rbx, Reg::r12, Reg::r13, Reg::r14, Reg::r15};
        if (perturb_) rng_.shuffle(saved);
        auto next_home = [&] {
            Home h;
            if (perturb_ && !saved.empty() && rng_.coin()) {
                h.reg = saved.back();
                saved.pop_back();
            } else {
                h.offset = offsets.back();
                offsets.pop_back();
            }
            return h;
        };
        local_offset_ = 0x80 + 8 * static_cast<int>(perturb_ ? rng_.below(8) : 0);

        open_block("entry");
        emit("push rbp");
        emit("mov rbp, rsp");
        emit("sub rsp, 0xa0");
        for (int i = 0; i < t_.args; ++i) {
            arg_home_.push_back(next_home());
            emit("mov " + arg_home_.back().operand() + ", " + reg(kArgRegisters[static_cast<std::size_t>(i)]));
        }

        // Results consumed by later steps get a home.
        std::set<int> used;
        for (const auto& s : t_.steps) {
            for (const auto& a : s.args) {
                if (a.kind == Src::ret || a.kind == Src::ret_plus) used.insert(static_cast<int>(a.a));
            }
        }

        for (std::size_t i = 0; i < t_.steps.size(); ++i) {
            const Step& step = t_.steps[i];
            dead_code();
            setup(step);
            if (step.api.empty()) {
                const Home& h = arg_home_.at(static_cast<std::size_t>(step.indirect_arg));
                emit("mov rax, " + h.operand());
                emit("call rax");
            } else {
                emit("call " + step.api);
            }
            rax_step_ = static_cast<int>(i);
            if (used.count(static_cast<int>(i))) {
                ret_home_[static_cast<int>(i)] = next_home();
                emit("mov " + ret_home_[static_cast<int>(i)].operand() + ", rax");
            }
            if (perturb_ && i + 1 < t_.steps.size() && rng_.coin(1, 3)) error_check(i);
        }
        dead_code();
        open_block("done");
        emit("mov rsp, rbp");
        emit("pop rbp");
        emit("ret");
        return layout();
    }

private:
    void open_block(std::string label) {
        if (!blocks_.empty()) blocks_.back().fallthrough = label;
        blocks_.push_back({std::move(label), {}, {}});
    }

    void emit(std::string line) { blocks_.back().lines.push_back(std::move(line)); }

    void dead_code() {
        if (!perturb_ || !rng_.coin(1, 3)) return;
        switch (rng_.below(4)) {
        case 0: emit("nop"); break;
        case 1: emit("mov r10, " + std::to_string(rng_.below(100))); break;
        case 2: emit("add r11, " + std::to_string(1 + rng_.below(16))); break;
        default: emit("xor r10d, r10d"); break;
        }
    }

    void error_check(std::size_t step) {
        const std::string fail = "fail" + std::to_string(step);
        emit("test rax, rax");
        emit("js " + fail);
        fail_blocks_.push_back({fail, {"mov eax, -1", "jmp done"}, {}});
        open_block("step" + std::to_string(step + 1));
    }

    std::string source_operand(const ArgSpec& a) {
        if (a.kind == Src::arg) return arg_home_.at(static_cast<std::size_t>(a.a)).operand();
        return ret_home_.at(static_cast<int>(a.a)).operand();
    }

    void setup(const Step& step) {
        std::vector<std::size_t> order(step.args.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        if (perturb_) rng_.shuffle(order);
        for (auto i : order) {
            const ArgSpec& a = step.args[i];
            const Reg r = kArgRegisters[i];
            const std::string rn = reg(r);
            switch (a.kind) {
            case Src::arg:
            case Src::ret: {
                const bool in_rax = a.kind == Src::ret && rax_step_ == a.a;
                if (in_rax && perturb_ && rng_.coin()) {
                    emit("mov " + rn + ", rax");
                } else if (perturb_ && rng_.coin(1, 3)) {
                    emit("mov rax, " + source_operand(a));
                    emit("mov " + rn + ", rax");
                    rax_step_ = -1;
                } else {
                    emit("mov " + rn + ", " + source_operand(a));
                }
                break;
            }
            case Src::ret_plus:
                emit("mov " + rn + ", " + source_operand(a));
                emit("add " + rn + ", " + std::to_string(a.b));
                break;
            case Src::constant: constant(r, a.a); break;
            case Src::str: {
                auto [it, fresh] = strings_.try_emplace(a.text, "s_" + std::to_string(strings_.size()));
                if (perturb_ && rng_.coin()) emit("lea " + rn + ", [rip + " + it->second + "]");
                else emit("mov " + rn + ", " + it->second);
                break;
            }
            case Src::local:
                emit("lea " + rn + ", " + slot(local_offset_));
                local_offset_ += 0x10;
                break;
            case Src::global: emit("mov " + rn + ", [rip + " + a.text + "]"); break;
            }
        }
    }

    void constant(Reg r, std::int64_t v) {
        const std::string rn = reg(r);
        const char* r32 = name32(r);
        const auto pick = perturb_ ? rng_.below(4) : 0;
        if (pick == 1 && v == 0 && r32) {
            emit(std::string("xor ") + r32 + ", " + r32);
        } else if (pick == 2 && v > 1) {
            const auto part = static_cast<std::int64_t>(rng_.below(static_cast<std::uint64_t>(v)));
            emit("mov " + rn + ", " + std::to_string(part));
            emit("add " + rn + ", " + std::to_string(v - part));
        } else if (pick == 3 && r32 && v >= 0) {
            emit(std::string("mov ") + r32 + ", " + std::to_string(v));
        } else {
            emit("mov " + rn + ", " + std::to_string(v));
        }
    }

    std::string layout() {
        std::vector<Block> all = blocks_;
        all.insert(all.end(), fail_blocks_.begin(), fail_blocks_.end());

        std::vector<Block> order;
        order.push_back(all.front());
        std::vector<Block> rest(all.begin() + 1, all.end());
        if (perturb_) rng_.shuffle(rest);
        order.insert(order.end(), rest.begin(), rest.end());

        std::ostringstream out;
        out << ".proc " << t_.name << " args=" << t_.args << "\n";
        for (std::size_t i = 0; i < order.size(); ++i) {
            const Block& b = order[i];
            out << ".bb " << b.label << "\n";
            for (const auto& l : b.lines) out << "    " << l << "\n";
            const bool next_ok = i + 1 < order.size() && order[i + 1].label == b.fallthrough;
            if (b.fallthrough.empty() || next_ok) continue;
            const bool ends_jcc = !b.lines.empty() && b.lines.back().rfind("js ", 0) == 0;
            if (ends_jcc) out << ".bb " << b.label << "_ft\n";
            out << "    jmp " << b.fallthrough << "\n";
        }
        out << ".endproc\n";
        return out.str();
    }

    const Template& t_;
    Rng& rng_;
    bool perturb_;
    std::map<std::string, std::string>& strings_;
    std::vector<Home> arg_home_;
    std::map<int, Home> ret_home_;
    std::vector<Block> blocks_;
    std::vector<Block> fail_blocks_;
    int local_offset_ = 0x80;
    int rax_step_ = -1;
};

} // namespace

std::vector<SyntheticDocument> generate_synthetic_corpus(std::uint64_t seed, std::size_t count,
                                                         const SynthOptions& options) {
    std::vector<SyntheticDocument> docs;
    Rng rng(seed);
    const auto per_package = std::max<std::size_t>(1, options.procedures_per_package);
    const auto& all = templates();
    std::size_t made = 0;
    for (std::size_t pkg = 0; made < count; ++pkg) {
        SyntheticDocument doc;
        std::ostringstream id;
        id << "pkg_" << std::setfill('0') << std::setw(3) << pkg;
        doc.package = id.str();

        std::vector<std::size_t> pool(all.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        rng.shuffle(pool);
        const auto n = std::min({per_package, count - made, pool.size()});

        std::map<std::string, std::string> strings;   // bytes -> id
        std::vector<std::string> imports;
        std::string body;
        for (std::size_t k = 0; k < n; ++k) {
            const Template& t = all[pool[k]];
            for (const auto& s : t.steps) {
                if (!s.api.empty() && std::find(imports.begin(), imports.end(), s.api) == imports.end()) {
                    imports.push_back(s.api);
                }
            }
            ProcedureWriter w(t, rng, options.perturb, strings);
            body += w.write();
            doc.procedures.push_back({t.name, subtokenize_name(t.name)});
        }
        std::ostringstream text;
        text << "# synthetic package " << doc.package << "\n";
        for (const auto& imp : imports) text << ".import " << imp << " " << api_arity().at(imp) << "\n";
        std::vector<std::pair<std::string, std::string>> by_id;
        for (const auto& [bytes, sid] : strings) by_id.emplace_back(sid, bytes);
        std::sort(by_id.begin(), by_id.end(), [](const auto& a, const auto& b) {
            return std::stoi(a.first.substr(2)) < std::stoi(b.first.substr(2));
        });
        for (const auto& [sid, bytes] : by_id) text << ".string " << sid << " \"" << bytes << "\"\n";
        text << body;
        doc.text = text.str();
        docs.push_back(std::move(doc));
        made += n;
    }
    return docs;
}

} // namespace acs
