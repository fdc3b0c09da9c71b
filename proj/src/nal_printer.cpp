#include "acs/asm_ir.hpp"

#include <cstdio>
#include <sstream>

namespace acs {

namespace {

std::string escape(std::string_view bytes) {
    std::string out = "\"";
    for (unsigned char c : bytes) {
        switch (c) {
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        case '\\': out += "\\\\"; break;
        case '"': out += "\\\""; break;
        default:
            if (c < 32 || c >= 127 || c == '#' || c == ';') {
                char buf[5];
                std::snprintf(buf, sizeof buf, "\\x%02x", c);
                out += buf;
            } else {
                out.push_back(static_cast<char>(c));
            }
        }
    }
    out.push_back('"');
    return out;
}

std::string print_mem(const MemExpr& m) {
    if (m.stack_slot) return "[stack:" + std::to_string(*m.stack_slot) + "]";
    std::string out = "[";
    bool first = true;
    auto term = [&](const std::string& t) {
        if (!first) out += " + ";
        out += t;
        first = false;
    };
    if (m.base) term(std::string(reg_name(*m.base)));
    if (m.index) term(std::string(reg_name(*m.index)) + "*" + std::to_string(m.scale));
    if (!m.symbol.empty()) term(m.symbol);
    if (m.disp != 0 || first) {
        if (first) {
            out += std::to_string(m.disp);
        } else if (m.disp < 0) {
            out += " - " + std::to_string(0 - static_cast<std::uint64_t>(m.disp));
        } else {
            out += " + " + std::to_string(m.disp);
        }
    }
    out += "]";
    return out;
}

} // namespace

std::string print_operand(const Operand& op) {
    struct Visitor {
        std::string operator()(Reg r) const { return std::string(reg_name(r)); }
        std::string operator()(const Imm& i) const { return std::to_string(i.value); }
        std::string operator()(const MemExpr& m) const { return print_mem(m); }
        std::string operator()(const Label& l) const { return l.name; }
        std::string operator()(const StringRef& s) const { return s.id; }
    };
    return std::visit(Visitor{}, op);
}

std::string print_instruction(const Instruction& inst) {
    std::string out = inst.mnemonic;
    for (std::size_t i = 0; i < inst.operands.size(); ++i) {
        out += i == 0 ? " " : ", ";
        out += print_operand(inst.operands[i]);
    }
    return out;
}

std::string print_listing(const Program& program) {
    std::ostringstream os;
    for (const auto& imp : program.imports) {
        os << ".import " << imp.name << ' ' << (imp.arity ? std::to_string(*imp.arity) : "?") << '\n';
    }
    for (const auto& s : program.strings) os << ".string " << s.id << ' ' << escape(s.bytes) << '\n';
    for (const auto& proc : program.procedures) {
        os << "\n.proc " << proc.name;
        if (proc.declared_args) os << " args=" << *proc.declared_args;
        os << '\n';
        for (const auto& block : proc.blocks) {
            os << ".bb " << block.label << '\n';
            for (const auto& inst : block.instructions) os << "    " << print_instruction(inst) << '\n';
        }
        os << ".endproc\n";
    }
    return os.str();
}

} // namespace acs
