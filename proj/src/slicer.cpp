#include "acs/slicer.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace acs {

std::string_view tag_kind_name(TagKind kind) noexcept {
    switch (kind) {
    case TagKind::empty: return "EMPTY";
    case TagKind::stk: return "STK";
    case TagKind::ret: return "RET";
    case TagKind::global: return "GLOBAL";
    case TagKind::arg: return "ARG";
    case TagKind::concrete: return "CONCRETE";
    }
    return "EMPTY";
}

std::string AbstractTag::to_string() const {
    if (kind != TagKind::concrete) return std::string(tag_kind_name(kind));
    if (auto i = std::get_if<std::int64_t>(&concrete)) return std::to_string(*i);
    if (auto s = std::get_if<std::string>(&concrete)) return "\"" + *s + "\"";
    return "CONCRETE";
}

bool SliceContext::is_incoming_argument(Reg r) const noexcept {
    const auto it = std::find(kArgRegisters.begin(), kArgRegisters.end(), r);
    if (it == kArgRegisters.end()) return false;
    const auto index = static_cast<int>(it - kArgRegisters.begin());
    if (procedure && procedure->declared_args) return index < *procedure->declared_args;
    return true;
}

std::size_t SliceTree::instruction_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const SliceNode& n) {
        return n.kind == SliceNodeKind::instruction;
    }));
}

PathAnalysis::PathAnalysis(std::vector<const Instruction*> instructions) : insts_(std::move(instructions)) {
    effects_.reserve(insts_.size());
    reg_writer_.reserve(insts_.size());
    call_before_.reserve(insts_.size());

    std::array<std::int32_t, kRegCount> writers;
    writers.fill(-1);
    std::int32_t last_call = -1;
    int depth = 0;

    for (std::size_t pos = 0; pos < insts_.size(); ++pos) {
        const Instruction& inst = *insts_[pos];
        EffectSets e = effect_sets(inst);

        // push writes the slot at the current depth; pop reads the one below.
        auto resolve = [&](std::set<MemExpr>& set, int slot) {
            std::set<MemExpr> fixed;
            for (MemExpr m : set) {
                if (m.stack_slot) m.stack_slot = slot;
                fixed.insert(std::move(m));
            }
            set = std::move(fixed);
        };
        if (inst.mnemonic == "push") {
            resolve(e.p_write, depth);
            ++depth;
        } else if (inst.mnemonic == "pop") {
            --depth;
            resolve(e.p_read, depth);
        }

        reg_writer_.push_back(writers);
        call_before_.push_back(last_call);
        for (Reg r : e.v_write) writers[static_cast<std::size_t>(r)] = static_cast<std::int32_t>(pos);
        for (const auto& m : e.p_write) mem_writers_[m].push_back(pos);
        if (inst.is_call) last_call = static_cast<std::int32_t>(pos);
        effects_.push_back(std::move(e));
    }
}

std::optional<std::size_t> PathAnalysis::last_reg_write(std::size_t pos, Reg r) const {
    if (pos >= reg_writer_.size()) return std::nullopt;
    const auto w = reg_writer_[pos][static_cast<std::size_t>(r)];
    if (w < 0) return std::nullopt;
    return static_cast<std::size_t>(w);
}

std::optional<std::size_t> PathAnalysis::last_mem_write(std::size_t pos, const MemExpr& mem) const {
    const auto it = mem_writers_.find(mem);
    if (it == mem_writers_.end()) return std::nullopt;
    const auto& writers = it->second;
    auto lb = std::lower_bound(writers.begin(), writers.end(), pos);
    if (lb == writers.begin()) return std::nullopt;
    return *std::prev(lb);
}

std::optional<std::size_t> PathAnalysis::last_call(std::size_t pos) const {
    if (pos >= call_before_.size() || call_before_[pos] < 0) return std::nullopt;
    return static_cast<std::size_t>(call_before_[pos]);
}

namespace {

/// Registers that are direct register operands (as opposed to address parts).
std::set<Reg> register_operands(const Instruction& inst) {
    std::set<Reg> regs;
    for (const auto& op : inst.operands) {
        if (auto r = std::get_if<Reg>(&op)) regs.insert(*r);
    }
    return regs;
}

class SliceBuilder {
public:
    SliceBuilder(const PathAnalysis& path, const SliceContext& ctx) : path_(path), ctx_(ctx) {}

    SliceTree build(std::size_t call_pos, Reg reg) {
        SliceTree tree;
        tree.reg = reg;
        tree.call_pos = static_cast<std::uint32_t>(call_pos);
        SliceNode sink;
        sink.kind = SliceNodeKind::sink;
        sink.pos = static_cast<std::uint32_t>(call_pos);
        sink.reg = reg;
        nodes_.push_back(std::move(sink));
        const auto child = resolve_register(call_pos, reg);
        nodes_[0].children.push_back({EdgeRole::data, reg, child});

        while (!pending_.empty()) {
            const auto id = pending_.front();
            pending_.pop_front();
            expand(id);
        }
        tree.nodes = std::move(nodes_);
        return tree;
    }

private:
    std::uint32_t add(SliceNode node) {
        nodes_.push_back(std::move(node));
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    std::uint32_t leaf(SliceNodeKind kind, std::size_t consumer, std::optional<Reg> reg,
                       std::optional<MemExpr> mem) {
        auto key = std::make_tuple(static_cast<int>(kind), reg ? static_cast<int>(*reg) : -1,
                                   mem.value_or(MemExpr{}));
        // Entry-state leaves are shared; empty leaves stay per consumer.
        if (kind == SliceNodeKind::empty_leaf) std::get<1>(key) = -2 - static_cast<int>(consumer);
        if (auto it = leaves_.find(key); it != leaves_.end()) return it->second;
        SliceNode n;
        n.kind = kind;
        n.pos = static_cast<std::uint32_t>(consumer);
        n.reg = reg;
        n.mem = std::move(mem);
        const auto id = add(std::move(n));
        leaves_.emplace(std::move(key), id);
        return id;
    }

    std::uint32_t instruction_node(std::size_t pos) {
        if (auto it = by_pos_.find(pos); it != by_pos_.end()) return it->second;
        SliceNode n;
        n.kind = SliceNodeKind::instruction;
        n.pos = static_cast<std::uint32_t>(pos);
        n.inst = path_.at(pos);
        const auto id = add(std::move(n));
        by_pos_.emplace(pos, id);
        pending_.push_back(id);
        return id;
    }

    std::uint32_t resolve_register(std::size_t consumer, Reg r) {
        if (auto w = path_.last_reg_write(consumer, r)) return instruction_node(*w);
        if (ctx_.is_incoming_argument(r)) return leaf(SliceNodeKind::arg_leaf, consumer, r, std::nullopt);
        if (r == Reg::rbp || r == Reg::rsp) return leaf(SliceNodeKind::stack_leaf, consumer, r, std::nullopt);
        return leaf(SliceNodeKind::empty_leaf, consumer, r, std::nullopt);
    }

    std::uint32_t resolve_memory(std::size_t consumer, const MemExpr& m) {
        if (auto w = path_.last_mem_write(consumer, m)) return instruction_node(*w);
        if (m.is_global()) return leaf(SliceNodeKind::global_leaf, consumer, std::nullopt, m);
        return leaf(SliceNodeKind::empty_leaf, consumer, std::nullopt, m);
    }

    void expand(std::uint32_t id) {
        const std::size_t pos = nodes_[id].pos;
        const Instruction& inst = path_.at(pos);
        if (inst.is_call) return;              // producers of call results are opaque
        const EffectSets& e = path_.effects(pos);
        const auto direct = register_operands(inst);
        const bool reads_memory = !e.p_read.empty();
        std::vector<SliceEdge> edges;
        for (const auto& v : e.v_read) {
            const auto* r = std::get_if<Reg>(&v);
            if (!r) continue;
            const EdgeRole role = (reads_memory || !e.p_write.empty()) && !direct.count(*r) ? EdgeRole::address
                                                                                             : EdgeRole::data;
            edges.push_back({role, *r, resolve_register(pos, *r)});
        }
        for (const auto& m : e.p_read) edges.push_back({EdgeRole::memory, m, resolve_memory(pos, m)});
        nodes_[id].children = std::move(edges);
    }

    const PathAnalysis& path_;
    const SliceContext& ctx_;
    std::vector<SliceNode> nodes_;
    std::deque<std::uint32_t> pending_;
    std::map<std::size_t, std::uint32_t> by_pos_;
    std::map<std::tuple<int, int, MemExpr>, std::uint32_t> leaves_;
};

struct Ranked {
    AbstractTag tag;
    std::uint32_t pos = 0;     // origin of a concrete value, for tie-breaking
};

std::string truncate_bytes(const std::string& s) {
    return s.size() > kMaxConcreteString ? s.substr(0, kMaxConcreteString) : s;
}

std::optional<Ranked> initial_tag(const SliceNode& n) {
    switch (n.kind) {
    case SliceNodeKind::sink: return std::nullopt;
    case SliceNodeKind::arg_leaf: return Ranked{AbstractTag::of(TagKind::arg), n.pos};
    case SliceNodeKind::stack_leaf: return Ranked{AbstractTag::of(TagKind::stk), n.pos};
    case SliceNodeKind::global_leaf: return Ranked{AbstractTag::of(TagKind::global), n.pos};
    case SliceNodeKind::empty_leaf: return Ranked{AbstractTag::of(TagKind::empty), n.pos};
    case SliceNodeKind::constant_leaf: {
        if (!n.value) return Ranked{AbstractTag::of(TagKind::empty), n.pos};
        if (auto i = std::get_if<std::int64_t>(&*n.value)) return Ranked{AbstractTag::integer(*i), n.pos};
        if (auto s = std::get_if<StringValue>(&*n.value)) {
            return Ranked{AbstractTag::string(truncate_bytes(s->bytes)), n.pos};
        }
        return Ranked{AbstractTag::of(TagKind::global), n.pos};
    }
    case SliceNodeKind::instruction: {
        if (!n.inst) return std::nullopt;
        const Instruction& inst = *n.inst;
        if (inst.is_call) return Ranked{AbstractTag::of(TagKind::ret), n.pos};
        // An unfolded copy of a literal still carries that literal.
        const bool copy = inst.mnemonic == "mov" || inst.mnemonic == "movzx" || inst.mnemonic == "movsx" ||
                          inst.mnemonic == "movsxd" || inst.mnemonic == "push";
        if (copy && !inst.operands.empty()) {
            const Operand& src = inst.operands.back();
            if (auto imm = std::get_if<Imm>(&src)) return Ranked{AbstractTag::integer(imm->value), n.pos};
            if (std::holds_alternative<Label>(src)) return Ranked{AbstractTag::of(TagKind::global), n.pos};
        }
        return std::nullopt;
    }
    }
    return std::nullopt;
}

/// True when `a` should replace `b` as the merged value.
bool prefer(const Ranked& a, const Ranked& b, bool& conflict) {
    if (a.tag.kind != b.tag.kind) return a.tag.kind > b.tag.kind;
    if (a.tag.kind == TagKind::concrete && a.tag != b.tag) {
        conflict = true;
        return a.pos < b.pos;
    }
    return false;
}

} // namespace

SliceTree slice_register(const PathAnalysis& path, std::size_t call_pos, Reg reg, const SliceContext& ctx) {
    return SliceBuilder(path, ctx).build(call_pos, reg);
}

Propagation assign_and_propagate(const SliceTree& tree, const SliceContext& ctx) {
    (void)ctx;
    Propagation out;
    if (tree.nodes.empty()) return out;

    // Children precede parents in path order, so a post-order over the DAG
    // visits each node once.
    std::vector<std::optional<Ranked>> memo(tree.nodes.size());
    std::vector<std::uint8_t> state(tree.nodes.size(), 0);
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const auto id = stack.back();
        const auto& node = tree.nodes[id];
        if (state[id] == 0) {
            state[id] = 1;
            for (const auto& e : node.children) {
                if (state[e.target] == 0) stack.push_back(e.target);
            }
            continue;
        }
        stack.pop_back();
        if (state[id] == 2) continue;
        state[id] = 2;
        std::optional<Ranked> best = initial_tag(node);
        for (const auto& e : node.children) {
            const auto& child = memo[e.target];
            if (!child) continue;
            if (!best || prefer(*child, *best, out.concrete_conflict)) best = child;
        }
        memo[id] = best;
    }
    out.tag = memo[0] ? memo[0]->tag : AbstractTag::of(TagKind::empty);
    return out;
}

Propagation argument_value(const PathAnalysis& path, std::size_t call_pos, Reg reg, const SliceContext& ctx,
                           bool* overflow) {
    const auto tree = reoptimize_slice(slice_register(path, call_pos, reg, ctx), ctx);
    if (overflow) *overflow = tree.overflow;
    return assign_and_propagate(tree, ctx);
}

std::optional<ConstValue> constant_at(const PathAnalysis& path, std::size_t pos, Reg reg, const SliceContext& ctx) {
    const auto tree = reoptimize_slice(slice_register(path, pos, reg, ctx), ctx);
    const auto& root = tree.root();
    if (root.children.size() != 1) return std::nullopt;
    const auto& child = tree.nodes[root.children[0].target];
    if (child.kind != SliceNodeKind::constant_leaf) return std::nullopt;
    return child.value;
}

} // namespace acs
