#pragma once

// Normalized assembly listing (NAL): typed x86-64 instructions grouped into
// procedures and basic blocks, plus per-instruction dataflow effect sets.

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace acs {

/// 64-bit register families. Sub-register spellings never survive parsing.
enum class Reg : std::uint8_t {
    rax, rcx, rdx, rbx, rsp, rbp, rsi, rdi,
    r8, r9, r10, r11, r12, r13, r14, r15,
    rip,
};

inline constexpr std::size_t kRegCount = 17;

std::string_view reg_name(Reg r) noexcept;

/// Maps any recognized register spelling (eax, ax, al, r8d, ...) to its family.
/// Throws acs::Error on unknown tokens.
Reg canonicalize_register(std::string_view token);
std::optional<Reg> try_canonicalize_register(std::string_view token) noexcept;

struct Imm {
    std::int64_t value = 0;
    auto operator<=>(const Imm&) const = default;
};

/// Symbolic name: a basic block, a procedure, an import or a data symbol.
struct Label {
    std::string name;
    auto operator<=>(const Label&) const = default;
};

/// Reference to a `.string` literal by id.
struct StringRef {
    std::string id;
    auto operator<=>(const StringRef&) const = default;
};

/// `[base + index*scale + symbol + disp]`, or a push/pop stack slot.
///
/// Displacements are constant-folded at parse time so two spellings of the
/// same address compare equal. `stack_slot` is set only for the implicit
/// memory operand of push/pop; effect_sets() reports it relative to the
/// current top (0) and path analysis rewrites it to an absolute depth.
struct MemExpr {
    std::optional<Reg> base;
    std::optional<Reg> index;
    int scale = 1;
    std::int64_t disp = 0;
    std::string symbol;
    std::optional<int> stack_slot;

    auto operator<=>(const MemExpr&) const = default;

    bool is_stack_slot() const noexcept { return stack_slot.has_value(); }
    /// Absolute or rip-relative address: nothing register-dependent except rip.
    bool is_global() const noexcept {
        return !stack_slot && !index && (!base || *base == Reg::rip);
    }
};

using Operand = std::variant<Reg, Imm, MemExpr, Label, StringRef>;

enum class OperandKind : std::uint8_t { reg, imm, mem, label, string_ref };

inline OperandKind kind_of(const Operand& op) noexcept {
    return static_cast<OperandKind>(op.index());
}

struct Instruction {
    std::uint32_t seq = 0;          // ordinal within the procedure, listing order
    std::string mnemonic;
    std::vector<Operand> operands;
    bool is_call = false;
    bool is_terminator = false;
    std::uint32_t line = 0;         // source line, not part of identity

    bool operator==(const Instruction& other) const {
        return seq == other.seq && mnemonic == other.mnemonic && operands == other.operands &&
               is_call == other.is_call && is_terminator == other.is_terminator;
    }

    /// Same mnemonic and operands, ignoring position.
    bool same_content(const Instruction& other) const {
        return mnemonic == other.mnemonic && operands == other.operands;
    }
};

bool is_conditional_jump(std::string_view mnemonic) noexcept;
bool is_terminator_mnemonic(std::string_view mnemonic) noexcept;

struct BasicBlock {
    std::string label;
    std::vector<Instruction> instructions;
    bool operator==(const BasicBlock&) const = default;
};

struct Procedure {
    std::string name;                  // `anon_N` for unlabeled procedures
    std::optional<int> declared_args;
    std::vector<BasicBlock> blocks;

    bool operator==(const Procedure&) const = default;

    bool anonymous() const noexcept;
    std::size_t instruction_count() const noexcept;
    /// Position of the block carrying `label`, if any.
    std::optional<std::size_t> find_block(std::string_view label) const noexcept;
};

struct Import {
    std::string name;
    std::optional<int> arity;          // nullopt for `?`
    bool operator==(const Import&) const = default;
};

struct StringLiteral {
    std::string id;
    std::string bytes;
    bool operator==(const StringLiteral&) const = default;
};

struct Program {
    std::vector<Import> imports;       // declaration order
    std::vector<StringLiteral> strings;
    std::vector<Procedure> procedures;

    bool operator==(const Program&) const = default;

    const Import* find_import(std::string_view name) const noexcept;
    const StringLiteral* find_string(std::string_view id) const noexcept;
    const Procedure* find_procedure(std::string_view name) const noexcept;
};

/// Parses a NAL document. Throws ParseError with line/column on malformed input,
/// unknown registers, undefined jump targets and duplicate labels.
Program parse_listing(std::string_view text);

/// Canonical NAL text; parse_listing(print_listing(p)) == p.
std::string print_listing(const Program& program);
std::string print_instruction(const Instruction& inst);
std::string print_operand(const Operand& op);

using ReadValue = std::variant<Reg, Imm, StringRef, Label>;

struct EffectSets {
    std::set<ReadValue> v_read;
    std::set<Reg> v_write;
    std::set<MemExpr> p_read;
    std::set<MemExpr> p_write;

    bool operator==(const EffectSets&) const = default;
    bool empty() const noexcept {
        return v_read.empty() && v_write.empty() && p_read.empty() && p_write.empty();
    }
};

/// Dataflow read/write sets of one instruction. Control-flow instructions carry
/// no stack or instruction-pointer effects; a call writes rax.
EffectSets effect_sets(const Instruction& inst);

/// Registers appearing inside an address expression (rip excluded).
std::vector<Reg> address_registers(const MemExpr& mem);

} // namespace acs
