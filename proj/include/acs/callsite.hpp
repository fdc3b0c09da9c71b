#pragma once

// Call-target classification and prototype reconstruction under the
// System V AMD64 register convention.

#include "acs/asm_ir.hpp"
#include "acs/slicer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace acs {

enum class TargetKind : std::uint8_t { internal, external, indirect };

struct CallTarget {
    TargetKind kind = TargetKind::indirect;
    std::string name;                  // import name or internal procedure name
    std::optional<Reg> reg;            // register of an indirect call
    bool unresolved = false;           // indirect target that could not be resolved
    bool via_register = false;         // resolved from a register constant on the path

    bool operator==(const CallTarget&) const = default;
};

/// Classifies a call. With a path, a register target holding a known symbol
/// is reclassified as internal or external.
CallTarget classify_target(const Instruction& call, const Program& program, const PathAnalysis* path = nullptr,
                           std::size_t pos = 0, const SliceContext* ctx = nullptr);

enum class ArityMode : std::uint8_t { library_debug, no_library_debug };

inline constexpr int kMaxRegisterArgs = 6;

struct Arity {
    int count = 0;
    bool unknown = false;              // rendered as 0 arguments
    bool from_declaration = false;
    bool clamped = false;              // declaration above six registers
    bool operator==(const Arity&) const = default;
};

/// Longest prefix of rdi, rsi, rdx, rcx, r8, r9 written after the previous call.
int inferred_arity(const PathAnalysis& path, std::size_t call_pos);

Arity resolve_arity(const CallTarget& target, const Program& program, const PathAnalysis& path,
                    std::size_t call_pos, ArityMode mode);

struct CallSiteProto {
    CallTarget target;
    std::string display_name;          // import name, UnknownInternal or UnknownIndirect
    Arity arity;
    std::vector<Reg> arg_registers;
    Reg return_register = Reg::rax;

    bool operator==(const CallSiteProto&) const = default;
    /// e.g. "connect(rdi, rsi, rdx)"
    std::string to_string() const;
};

/// Throws AnalysisError when arity exceeds six registers.
CallSiteProto reconstruct_callsite(const CallTarget& target, const Arity& arity);

} // namespace acs
