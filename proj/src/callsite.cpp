#include "acs/callsite.hpp"
#include "acs/error.hpp"

#include <algorithm>

namespace acs {

namespace {

std::optional<CallTarget> by_name(const std::string& name, const Program& program) {
    if (program.find_import(name)) return CallTarget{TargetKind::external, name, std::nullopt, false, false};
    if (program.find_procedure(name)) return CallTarget{TargetKind::internal, name, std::nullopt, false, false};
    return std::nullopt;
}

} // namespace

CallTarget classify_target(const Instruction& call, const Program& program, const PathAnalysis* path,
                           std::size_t pos, const SliceContext* ctx) {
    if (call.operands.empty()) return {TargetKind::indirect, {}, std::nullopt, true, false};
    const Operand& op = call.operands.front();
    if (const auto* label = std::get_if<Label>(&op)) {
        if (auto t = by_name(label->name, program)) return *t;
        return {TargetKind::indirect, {}, std::nullopt, true, false};
    }
    if (const auto* reg = std::get_if<Reg>(&op)) {
        CallTarget t{TargetKind::indirect, {}, *reg, true, false};
        if (path && ctx) {
            if (auto v = constant_at(*path, pos, *reg, *ctx)) {
                if (const auto* sym = std::get_if<SymbolValue>(&*v)) {
                    if (auto resolved = by_name(sym->name, program)) {
                        resolved->via_register = true;
                        resolved->reg = *reg;
                        return *resolved;
                    }
                }
            }
        }
        return t;
    }
    return {TargetKind::indirect, {}, std::nullopt, true, false};
}

int inferred_arity(const PathAnalysis& path, std::size_t call_pos) {
    const auto previous = path.last_call(call_pos);
    int count = 0;
    for (Reg r : kArgRegisters) {
        const auto w = path.last_reg_write(call_pos, r);
        if (!w || (previous && *w <= *previous)) break;
        ++count;
    }
    return count;
}

Arity resolve_arity(const CallTarget& target, const Program& program, const PathAnalysis& path,
                    std::size_t call_pos, ArityMode mode) {
    Arity a;
    if (target.kind == TargetKind::indirect && target.unresolved) {
        a.unknown = true;
        return a;
    }
    if (target.kind == TargetKind::external && mode == ArityMode::library_debug) {
        const Import* imp = program.find_import(target.name);
        if (imp && imp->arity) {
            a.from_declaration = true;
            a.count = std::clamp(*imp->arity, 0, kMaxRegisterArgs);
            a.clamped = *imp->arity > kMaxRegisterArgs;
            return a;
        }
    }
    a.count = inferred_arity(path, call_pos);
    return a;
}

CallSiteProto reconstruct_callsite(const CallTarget& target, const Arity& arity) {
    if (arity.count < 0 || arity.count > kMaxRegisterArgs) {
        throw AnalysisError("call site arity " + std::to_string(arity.count) + " exceeds the six register arguments");
    }
    CallSiteProto p;
    p.target = target;
    p.arity = arity;
    switch (target.kind) {
    case TargetKind::external: p.display_name = target.name; break;
    case TargetKind::internal: p.display_name = "UnknownInternal"; break;
    case TargetKind::indirect: p.display_name = "UnknownIndirect"; break;
    }
    p.arg_registers.assign(kArgRegisters.begin(), kArgRegisters.begin() + arity.count);
    return p;
}

std::string CallSiteProto::to_string() const {
    std::string s = display_name + "(";
    for (std::size_t i = 0; i < arg_registers.size(); ++i) {
        if (i) s += ", ";
        s += reg_name(arg_registers[i]);
    }
    return s + ")";
}

} // namespace acs
