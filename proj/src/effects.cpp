#include "acs/asm_ir.hpp"

#include <algorithm>
#include <array>

namespace acs {

namespace {

constexpr std::array<std::string_view, 4> kMoves = {"mov", "movzx", "movsx", "movsxd"};
constexpr std::array<std::string_view, 10> kBinary = {"add", "sub", "xor", "and", "or",
                                                      "shl", "shr", "sar", "adc", "sbb"};

bool one_of(std::string_view m, auto const& table) {
    return std::find(table.begin(), table.end(), m) != table.end();
}

void read_address(EffectSets& e, const MemExpr& mem) {
    for (Reg r : address_registers(mem)) e.v_read.insert(r);
}

/// Value read from a source operand: registers and constants go to v_read,
/// memory goes to p_read with its address registers in v_read.
void read_source(EffectSets& e, const Operand& op) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Reg>) {
                if (v != Reg::rip) e.v_read.insert(v);
            } else if constexpr (std::is_same_v<T, Imm> || std::is_same_v<T, Label> ||
                                 std::is_same_v<T, StringRef>) {
                e.v_read.insert(v);
            } else if constexpr (std::is_same_v<T, MemExpr>) {
                read_address(e, v);
                e.p_read.insert(v);
            }
        },
        op);
}

/// Destination written by an instruction; read-modify-write adds the old value.
void write_dest(EffectSets& e, const Operand& op, bool also_reads) {
    if (auto r = std::get_if<Reg>(&op)) {
        e.v_write.insert(*r);
        if (also_reads) e.v_read.insert(*r);
    } else if (auto m = std::get_if<MemExpr>(&op)) {
        read_address(e, *m);
        e.p_write.insert(*m);
        if (also_reads) e.p_read.insert(*m);
    }
}

EffectSets conservative(const Instruction& inst) {
    EffectSets e;
    for (const auto& op : inst.operands) {
        if (auto r = std::get_if<Reg>(&op)) {
            if (*r != Reg::rip) e.v_read.insert(*r);
        } else if (auto m = std::get_if<MemExpr>(&op)) {
            read_address(e, *m);
        }
    }
    if (!inst.operands.empty()) {
        if (auto r = std::get_if<Reg>(&inst.operands.front())) e.v_write.insert(*r);
    }
    return e;
}

MemExpr stack_top() {
    MemExpr slot;
    slot.stack_slot = 0;
    return slot;
}

} // namespace

EffectSets effect_sets(const Instruction& inst) {
    const std::string_view m = inst.mnemonic;
    const auto& ops = inst.operands;
    EffectSets e;

    if (m == "nop" || m == "ret" || m == "jmp" || is_conditional_jump(m)) return e;

    if (m == "call") {
        e.v_write.insert(Reg::rax);
        if (ops.empty()) return e;
        if (auto r = std::get_if<Reg>(&ops[0])) {
            e.v_read.insert(*r);
            MemExpr target;
            target.base = *r;
            e.p_read.insert(target);
        } else if (auto mem = std::get_if<MemExpr>(&ops[0])) {
            read_address(e, *mem);
            e.p_read.insert(*mem);
        }
        return e;
    }

    if (one_of(m, kMoves) && ops.size() == 2) {
        write_dest(e, ops[0], false);
        read_source(e, ops[1]);
        return e;
    }

    if (m == "lea" && ops.size() == 2) {
        write_dest(e, ops[0], false);
        if (auto mem = std::get_if<MemExpr>(&ops[1])) {
            read_address(e, *mem);
            if (!mem->symbol.empty()) e.v_read.insert(Label{mem->symbol});
        } else {
            read_source(e, ops[1]);
        }
        return e;
    }

    if (one_of(m, kBinary) && ops.size() == 2) {
        write_dest(e, ops[0], true);
        read_source(e, ops[1]);
        return e;
    }

    if (m == "imul") {
        if (ops.size() == 3) {
            write_dest(e, ops[0], false);
            read_source(e, ops[1]);
            read_source(e, ops[2]);
            return e;
        }
        if (ops.size() == 2) {
            write_dest(e, ops[0], true);
            read_source(e, ops[1]);
            return e;
        }
        return conservative(inst);
    }

    if ((m == "inc" || m == "dec" || m == "neg" || m == "not") && ops.size() == 1) {
        write_dest(e, ops[0], true);
        return e;
    }

    if ((m == "cmp" || m == "test") && ops.size() == 2) {
        read_source(e, ops[0]);
        read_source(e, ops[1]);
        return e;
    }

    if (m == "push" && ops.size() == 1) {
        read_source(e, ops[0]);
        e.p_write.insert(stack_top());
        return e;
    }

    if (m == "pop" && ops.size() == 1) {
        write_dest(e, ops[0], false);
        e.p_read.insert(stack_top());
        return e;
    }

    return conservative(inst);
}

} // namespace acs
