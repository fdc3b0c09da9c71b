#pragma once

// Pointer-aware backward slices of argument registers along one path,
// constant re-optimization of the slice, and abstract-value propagation.

#include "acs/asm_ir.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace acs {

/// Ascending preference: a higher kind always wins a merge.
enum class TagKind : std::uint8_t { empty, stk, ret, global, arg, concrete };

std::string_view tag_kind_name(TagKind kind) noexcept;

struct AbstractTag {
    TagKind kind = TagKind::empty;
    std::variant<std::monostate, std::int64_t, std::string> concrete;

    static AbstractTag of(TagKind kind) { return {kind, std::monostate{}}; }
    static AbstractTag integer(std::int64_t v) { return {TagKind::concrete, v}; }
    static AbstractTag string(std::string s) { return {TagKind::concrete, std::move(s)}; }

    bool is_int() const noexcept { return std::holds_alternative<std::int64_t>(concrete); }
    bool is_string() const noexcept { return std::holds_alternative<std::string>(concrete); }

    bool operator==(const AbstractTag&) const = default;
    std::string to_string() const;
};

/// Concrete strings are cut to this many bytes.
inline constexpr std::size_t kMaxConcreteString = 32;

/// Procedure-level facts the slicer needs: string literals and which
/// registers carry incoming arguments.
struct SliceContext {
    const Program* program = nullptr;
    const Procedure* procedure = nullptr;
    bool is_incoming_argument(Reg r) const noexcept;
};

inline constexpr std::array<Reg, 6> kArgRegisters = {Reg::rdi, Reg::rsi, Reg::rdx, Reg::rcx, Reg::r8, Reg::r9};

/// Effect sets of every instruction on one path plus last-write lookups.
/// push/pop stack slots are resolved to absolute depths along the path.
class PathAnalysis {
public:
    explicit PathAnalysis(std::vector<const Instruction*> instructions);

    std::size_t size() const noexcept { return insts_.size(); }
    const Instruction& at(std::size_t pos) const { return *insts_.at(pos); }
    const EffectSets& effects(std::size_t pos) const { return effects_.at(pos); }

    /// Greatest position < pos whose v_write contains r.
    std::optional<std::size_t> last_reg_write(std::size_t pos, Reg r) const;
    /// Greatest position < pos whose p_write contains an expression equal to mem.
    std::optional<std::size_t> last_mem_write(std::size_t pos, const MemExpr& mem) const;
    /// Greatest call position < pos.
    std::optional<std::size_t> last_call(std::size_t pos) const;

private:
    std::vector<const Instruction*> insts_;
    std::vector<EffectSets> effects_;
    std::vector<std::array<std::int32_t, kRegCount>> reg_writer_;   // last writer strictly before pos
    std::vector<std::int32_t> call_before_;
    std::map<MemExpr, std::vector<std::size_t>> mem_writers_;
};

struct StringValue {
    std::string bytes;
    bool operator==(const StringValue&) const = default;
};

/// Address of a code or data symbol.
struct SymbolValue {
    std::string name;
    bool operator==(const SymbolValue&) const = default;
};

using ConstValue = std::variant<std::int64_t, StringValue, SymbolValue>;

enum class SliceNodeKind : std::uint8_t {
    sink,          // the argument register at the call
    instruction,   // a path instruction reached through last-write links
    arg_leaf,      // incoming procedure argument register
    stack_leaf,    // rbp/rsp as found on procedure entry
    global_leaf,   // global memory with no write on the path
    empty_leaf,    // nothing produced this value on the path
    constant_leaf, // folded by re-optimization
};

enum class EdgeRole : std::uint8_t { data, address, memory };

struct SliceEdge {
    EdgeRole role = EdgeRole::data;
    std::variant<Reg, MemExpr> via;
    std::uint32_t target = 0;
    bool operator==(const SliceEdge&) const = default;
};

struct SliceNode {
    SliceNodeKind kind = SliceNodeKind::empty_leaf;
    std::uint32_t pos = 0;                 // path position (consumer position for leaves)
    std::optional<Instruction> inst;       // instruction nodes only
    std::optional<Reg> reg;                // sink and register leaves
    std::optional<MemExpr> mem;            // global leaves
    std::optional<ConstValue> value;       // constant leaves
    std::vector<SliceEdge> children;
    bool operator==(const SliceNode&) const = default;
};

/// Rooted at node 0 (the sink). Edges always lead to earlier path positions,
/// so the graph is acyclic; shared producers appear once.
struct SliceTree {
    Reg reg = Reg::rax;
    std::uint32_t call_pos = 0;
    std::vector<SliceNode> nodes;
    bool overflow = false;                 // re-optimization wrapped modulo 2^64

    bool operator==(const SliceTree&) const = default;
    std::size_t instruction_count() const noexcept;
    const SliceNode& root() const { return nodes.at(0); }
};

SliceTree slice_register(const PathAnalysis& path, std::size_t call_pos, Reg reg, const SliceContext& ctx);

/// Folds constant arithmetic and copies; folded chains become one constant leaf.
/// Loads whose address registers fold to constants lose those address links.
SliceTree reoptimize_slice(const SliceTree& tree, const SliceContext& ctx);

struct Propagation {
    AbstractTag tag;
    bool concrete_conflict = false;        // two distinct constants met; earlier one kept
};

/// Initial tags on leaves and producers, merged sink-ward by preference.
Propagation assign_and_propagate(const SliceTree& tree, const SliceContext& ctx);

/// Slice, re-optimize and propagate in one step.
Propagation argument_value(const PathAnalysis& path, std::size_t call_pos, Reg reg, const SliceContext& ctx,
                           bool* overflow = nullptr);

/// Constant the register holds at `pos`, if re-optimization can prove one.
std::optional<ConstValue> constant_at(const PathAnalysis& path, std::size_t pos, Reg reg, const SliceContext& ctx);

} // namespace acs
