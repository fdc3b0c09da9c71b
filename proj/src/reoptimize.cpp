#include "acs/slicer.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace acs {

namespace {

class Folder {
public:
    Folder(const SliceTree& tree, const SliceContext& ctx)
        : tree_(tree), ctx_(ctx), memo_(tree.nodes.size()), done_(tree.nodes.size(), false) {}

    bool overflow() const noexcept { return overflow_; }

    std::optional<ConstValue> value(std::uint32_t id) {
        if (done_[id]) return memo_[id];
        // Children sit at strictly earlier positions; recursion depth is bounded
        // by the chain length, so evaluate dependencies bottom-up first.
        std::vector<std::uint32_t> order;
        std::vector<std::uint32_t> stack{id};
        std::vector<bool> seen(tree_.nodes.size(), false);
        while (!stack.empty()) {
            const auto n = stack.back();
            stack.pop_back();
            if (seen[n] || done_[n]) continue;
            seen[n] = true;
            order.push_back(n);
            for (const auto& e : tree_.nodes[n].children) stack.push_back(e.target);
        }
        // Process in descending path position so producers come first.
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
            return rank(a) < rank(b);
        });
        for (auto n : order) {
            memo_[n] = evaluate(n);
            done_[n] = true;
        }
        return memo_[id];
    }

private:
    // Leaves and earlier instructions evaluate first; the sink last.
    std::int64_t rank(std::uint32_t id) const {
        const auto& n = tree_.nodes[id];
        if (n.kind == SliceNodeKind::sink) return std::numeric_limits<std::int64_t>::max();
        if (n.kind == SliceNodeKind::instruction) return 2 * static_cast<std::int64_t>(n.pos) + 1;
        return -1;
    }

    const SliceEdge* edge_for(const SliceNode& n, const std::variant<Reg, MemExpr>& via) const {
        for (const auto& e : n.children) {
            if (e.via == via) return &e;
        }
        return nullptr;
    }

    const SliceEdge* memory_edge(const SliceNode& n) const {
        for (const auto& e : n.children) {
            if (e.role == EdgeRole::memory) return &e;
        }
        return nullptr;
    }

    std::optional<ConstValue> symbol_value(const std::string& name) const {
        if (ctx_.program) {
            if (const auto* s = ctx_.program->find_string(name)) return StringValue{s->bytes};
        }
        return SymbolValue{name};
    }

    std::optional<ConstValue> operand_value(const SliceNode& n, const Operand& op) const {
        if (auto imm = std::get_if<Imm>(&op)) return imm->value;
        if (auto s = std::get_if<StringRef>(&op)) return symbol_value(s->id);
        if (auto l = std::get_if<Label>(&op)) return symbol_value(l->name);
        if (auto r = std::get_if<Reg>(&op)) {
            const auto* e = edge_for(n, *r);
            return e ? memo_[e->target] : std::nullopt;
        }
        if (auto m = std::get_if<MemExpr>(&op)) {
            const auto* e = edge_for(n, *m);
            if (!e) return std::nullopt;
            // Only a value stored on the path is known; untouched memory is not.
            if (tree_.nodes[e->target].kind != SliceNodeKind::instruction &&
                tree_.nodes[e->target].kind != SliceNodeKind::constant_leaf) {
                return std::nullopt;
            }
            return memo_[e->target];
        }
        return std::nullopt;
    }

    std::optional<std::int64_t> int_of(const SliceNode& n, const Operand& op) const {
        auto v = operand_value(n, op);
        if (!v) return std::nullopt;
        if (auto i = std::get_if<std::int64_t>(&*v)) return *i;
        return std::nullopt;
    }

    std::optional<ConstValue> evaluate(std::uint32_t id) {
        const auto& n = tree_.nodes[id];
        switch (n.kind) {
        case SliceNodeKind::constant_leaf: return n.value;
        case SliceNodeKind::sink:
            return n.children.empty() ? std::nullopt : memo_[n.children.front().target];
        case SliceNodeKind::instruction: return evaluate_instruction(n);
        default: return std::nullopt;
        }
    }

    std::optional<ConstValue> evaluate_instruction(const SliceNode& n) {
        const Instruction& inst = *n.inst;
        const auto& m = inst.mnemonic;
        const auto& ops = inst.operands;
        if (inst.is_call) return std::nullopt;

        if ((m == "mov" || m == "movzx" || m == "movsx" || m == "movsxd") && ops.size() == 2) {
            return operand_value(n, ops[1]);
        }
        if (m == "push" && ops.size() == 1) return operand_value(n, ops[0]);
        if (m == "pop" && ops.size() == 1) {
            const auto* e = memory_edge(n);
            if (!e || tree_.nodes[e->target].kind != SliceNodeKind::instruction) return std::nullopt;
            return memo_[e->target];
        }
        if (m == "lea" && ops.size() == 2) {
            if (!std::holds_alternative<MemExpr>(ops[1])) return operand_value(n, ops[1]);
            const auto& mem = std::get<MemExpr>(ops[1]);
            if (!mem.symbol.empty()) {
                if (mem.index || (mem.base && *mem.base != Reg::rip) || mem.disp != 0) return std::nullopt;
                return symbol_value(mem.symbol);
            }
            if (mem.base == Reg::rip || mem.index == Reg::rip) return std::nullopt;
            std::uint64_t addr = static_cast<std::uint64_t>(mem.disp);
            if (mem.base) {
                auto b = int_of(n, *mem.base);
                if (!b) return std::nullopt;
                addr += static_cast<std::uint64_t>(*b);
            }
            if (mem.index) {
                auto i = int_of(n, *mem.index);
                if (!i) return std::nullopt;
                addr += static_cast<std::uint64_t>(*i) * static_cast<std::uint64_t>(mem.scale);
            }
            return static_cast<std::int64_t>(addr);
        }
        if ((m == "xor" || m == "sub") && ops.size() == 2 && std::holds_alternative<Reg>(ops[0]) &&
            ops[0] == ops[1]) {
            return std::int64_t{0};
        }
        if (ops.size() == 2 && (m == "add" || m == "sub" || m == "and" || m == "or" || m == "xor" ||
                                m == "shl" || m == "shr" || m == "sar" || m == "imul")) {
            auto a = int_of(n, ops[0]);
            auto b = int_of(n, ops[1]);
            if (!a || !b) return std::nullopt;
            return binary(m, *a, *b);
        }
        if (m == "imul" && ops.size() == 3) {
            auto a = int_of(n, ops[1]);
            auto b = int_of(n, ops[2]);
            if (!a || !b) return std::nullopt;
            return binary("imul", *a, *b);
        }
        if (ops.size() == 1 && (m == "inc" || m == "dec" || m == "neg" || m == "not")) {
            auto a = int_of(n, ops[0]);
            if (!a) return std::nullopt;
            std::int64_t r = 0;
            if (m == "inc") overflow_ |= __builtin_add_overflow(*a, std::int64_t{1}, &r);
            if (m == "dec") overflow_ |= __builtin_sub_overflow(*a, std::int64_t{1}, &r);
            if (m == "neg") overflow_ |= __builtin_sub_overflow(std::int64_t{0}, *a, &r);
            if (m == "not") r = ~*a;
            return r;
        }
        return std::nullopt;
    }

    std::int64_t binary(std::string_view m, std::int64_t a, std::int64_t b) {
        std::int64_t r = 0;
        const auto ua = static_cast<std::uint64_t>(a);
        const unsigned shift = static_cast<unsigned>(b) & 63u;
        if (m == "add") overflow_ |= __builtin_add_overflow(a, b, &r);
        else if (m == "sub") overflow_ |= __builtin_sub_overflow(a, b, &r);
        else if (m == "imul") overflow_ |= __builtin_mul_overflow(a, b, &r);
        else if (m == "and") r = a & b;
        else if (m == "or") r = a | b;
        else if (m == "xor") r = a ^ b;
        else if (m == "shl") {
            r = static_cast<std::int64_t>(ua << shift);
            if (shift != 0 && (ua >> (64 - shift)) != 0) overflow_ = true;
        } else if (m == "shr") r = static_cast<std::int64_t>(ua >> shift);
        else if (m == "sar") r = a >> shift;
        return r;
    }

    const SliceTree& tree_;
    const SliceContext& ctx_;
    std::vector<std::optional<ConstValue>> memo_;
    std::vector<bool> done_;
    bool overflow_ = false;
};

} // namespace

SliceTree reoptimize_slice(const SliceTree& tree, const SliceContext& ctx) {
    SliceTree out;
    out.reg = tree.reg;
    out.call_pos = tree.call_pos;
    out.overflow = tree.overflow;
    if (tree.nodes.empty()) return out;

    Folder folder(tree, ctx);
    folder.value(0);

    std::vector<std::int64_t> remap(tree.nodes.size(), -1);
    std::deque<std::uint32_t> queue;

    auto emit = [&](std::uint32_t old) -> std::uint32_t {
        if (remap[old] >= 0) return static_cast<std::uint32_t>(remap[old]);
        const auto& src = tree.nodes[old];
        SliceNode node;
        const auto folded = src.kind == SliceNodeKind::instruction ? folder.value(old) : std::nullopt;
        if (folded) {
            node.kind = SliceNodeKind::constant_leaf;
            node.pos = src.pos;
            node.value = folded;
        } else {
            node = src;
            node.children.clear();
            queue.push_back(old);
        }
        out.nodes.push_back(std::move(node));
        remap[old] = static_cast<std::int64_t>(out.nodes.size() - 1);
        return static_cast<std::uint32_t>(remap[old]);
    };

    emit(0);
    while (!queue.empty()) {
        const auto old = queue.front();
        queue.pop_front();
        const auto& src = tree.nodes[old];
        const auto self = static_cast<std::uint32_t>(remap[old]);

        // Address registers proven constant are folded into the address.
        std::int64_t folded_disp = 0;
        bool address_dynamic = false;
        std::vector<SliceEdge> kept;
        for (const auto& e : src.children) {
            if (src.kind == SliceNodeKind::instruction && e.role == EdgeRole::address) {
                auto v = folder.value(e.target);
                if (v && std::holds_alternative<std::int64_t>(*v)) {
                    folded_disp += std::get<std::int64_t>(*v);
                    continue;
                }
                address_dynamic = true;
            }
            kept.push_back(e);
        }
        const bool had_address = kept.size() != src.children.size();
        std::vector<SliceEdge> children;
        for (auto e : kept) {
            const auto& target = tree.nodes[e.target];
            if (had_address && !address_dynamic && e.role == EdgeRole::memory &&
                target.kind == SliceNodeKind::empty_leaf) {
                // Constant address with no store on the path: global memory.
                SliceNode g;
                g.kind = SliceNodeKind::global_leaf;
                g.pos = target.pos;
                MemExpr absolute;
                absolute.disp = static_cast<std::int64_t>(static_cast<std::uint64_t>(
                    std::get<MemExpr>(e.via).disp) + static_cast<std::uint64_t>(folded_disp));
                g.mem = absolute;
                out.nodes.push_back(std::move(g));
                e.target = static_cast<std::uint32_t>(out.nodes.size() - 1);
                children.push_back(e);
                continue;
            }
            e.target = emit(e.target);
            children.push_back(e);
        }
        out.nodes[self].children = std::move(children);
    }
    out.overflow = out.overflow || folder.overflow();
    return out;
}

} // namespace acs
