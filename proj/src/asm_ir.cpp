#include "acs/asm_ir.hpp"

#include "acs/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace acs {

namespace {

struct Alias {
    std::string_view token;
    Reg family;
};

// Every general-purpose spelling, including the legacy high-byte registers.
constexpr std::array kAliases = {
    Alias{"rax", Reg::rax}, Alias{"eax", Reg::rax}, Alias{"ax", Reg::rax}, Alias{"al", Reg::rax}, Alias{"ah", Reg::rax},
    Alias{"rcx", Reg::rcx}, Alias{"ecx", Reg::rcx}, Alias{"cx", Reg::rcx}, Alias{"cl", Reg::rcx}, Alias{"ch", Reg::rcx},
    Alias{"rdx", Reg::rdx}, Alias{"edx", Reg::rdx}, Alias{"dx", Reg::rdx}, Alias{"dl", Reg::rdx}, Alias{"dh", Reg::rdx},
    Alias{"rbx", Reg::rbx}, Alias{"ebx", Reg::rbx}, Alias{"bx", Reg::rbx}, Alias{"bl", Reg::rbx}, Alias{"bh", Reg::rbx},
    Alias{"rsp", Reg::rsp}, Alias{"esp", Reg::rsp}, Alias{"sp", Reg::rsp}, Alias{"spl", Reg::rsp},
    Alias{"rbp", Reg::rbp}, Alias{"ebp", Reg::rbp}, Alias{"bp", Reg::rbp}, Alias{"bpl", Reg::rbp},
    Alias{"rsi", Reg::rsi}, Alias{"esi", Reg::rsi}, Alias{"si", Reg::rsi}, Alias{"sil", Reg::rsi},
    Alias{"rdi", Reg::rdi}, Alias{"edi", Reg::rdi}, Alias{"di", Reg::rdi}, Alias{"dil", Reg::rdi},
    Alias{"r8", Reg::r8},   Alias{"r8d", Reg::r8},   Alias{"r8w", Reg::r8},   Alias{"r8b", Reg::r8},   Alias{"r8l", Reg::r8},
    Alias{"r9", Reg::r9},   Alias{"r9d", Reg::r9},   Alias{"r9w", Reg::r9},   Alias{"r9b", Reg::r9},   Alias{"r9l", Reg::r9},
    Alias{"r10", Reg::r10}, Alias{"r10d", Reg::r10}, Alias{"r10w", Reg::r10}, Alias{"r10b", Reg::r10}, Alias{"r10l", Reg::r10},
    Alias{"r11", Reg::r11}, Alias{"r11d", Reg::r11}, Alias{"r11w", Reg::r11}, Alias{"r11b", Reg::r11}, Alias{"r11l", Reg::r11},
    Alias{"r12", Reg::r12}, Alias{"r12d", Reg::r12}, Alias{"r12w", Reg::r12}, Alias{"r12b", Reg::r12}, Alias{"r12l", Reg::r12},
    Alias{"r13", Reg::r13}, Alias{"r13d", Reg::r13}, Alias{"r13w", Reg::r13}, Alias{"r13b", Reg::r13}, Alias{"r13l", Reg::r13},
    Alias{"r14", Reg::r14}, Alias{"r14d", Reg::r14}, Alias{"r14w", Reg::r14}, Alias{"r14b", Reg::r14}, Alias{"r14l", Reg::r14},
    Alias{"r15", Reg::r15}, Alias{"r15d", Reg::r15}, Alias{"r15w", Reg::r15}, Alias{"r15b", Reg::r15}, Alias{"r15l", Reg::r15},
    Alias{"rip", Reg::rip}, Alias{"eip", Reg::rip},
};

constexpr std::array<std::string_view, kRegCount> kFamilyNames = {
    "rax", "rcx", "rdx", "rbx", "rsp", "rbp", "rsi", "rdi",
    "r8", "r9", "r10", "r11", "r12", "r13", "r14", "r15", "rip",
};

} // namespace

std::string_view reg_name(Reg r) noexcept {
    return kFamilyNames[static_cast<std::size_t>(r)];
}

std::optional<Reg> try_canonicalize_register(std::string_view token) noexcept {
    std::string lowered(token);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const auto& alias : kAliases) {
        if (alias.token == lowered) return alias.family;
    }
    return std::nullopt;
}

Reg canonicalize_register(std::string_view token) {
    if (auto r = try_canonicalize_register(token)) return *r;
    throw Error("unknown register '" + std::string(token) + "'");
}

bool is_conditional_jump(std::string_view m) noexcept {
    static constexpr std::array<std::string_view, 20> kJcc = {
        "jz", "jnz", "je", "jne", "jl", "jle", "jg", "jge", "jb", "jbe",
        "ja", "jae", "js", "jns", "jnb", "jnae", "jc", "jnc", "jo", "jno",
    };
    return std::find(kJcc.begin(), kJcc.end(), m) != kJcc.end();
}

bool is_terminator_mnemonic(std::string_view m) noexcept {
    return m == "ret" || m == "jmp" || is_conditional_jump(m);
}

bool Procedure::anonymous() const noexcept {
    if (name.size() <= 5 || name.compare(0, 5, "anon_") != 0) return false;
    return std::all_of(name.begin() + 5, name.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::size_t Procedure::instruction_count() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.instructions.size();
    return n;
}

std::optional<std::size_t> Procedure::find_block(std::string_view label) const noexcept {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].label == label) return i;
    }
    return std::nullopt;
}

const Import* Program::find_import(std::string_view name) const noexcept {
    for (const auto& imp : imports) {
        if (imp.name == name) return &imp;
    }
    return nullptr;
}

const StringLiteral* Program::find_string(std::string_view id) const noexcept {
    for (const auto& s : strings) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

const Procedure* Program::find_procedure(std::string_view name) const noexcept {
    for (const auto& p : procedures) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::vector<Reg> address_registers(const MemExpr& mem) {
    std::vector<Reg> regs;
    if (mem.base && *mem.base != Reg::rip) regs.push_back(*mem.base);
    if (mem.index && *mem.index != Reg::rip &&
        std::find(regs.begin(), regs.end(), *mem.index) == regs.end()) {
        regs.push_back(*mem.index);
    }
    return regs;
}

} // namespace acs
