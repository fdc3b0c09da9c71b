#include "acs/repr.hpp"
#include "acs/subtokens.hpp"

#include <algorithm>
#include <set>

namespace acs {

Callee callee_of(const CallSiteProto& proto) {
    switch (proto.target.kind) {
    case TargetKind::external: return {CalleeKind::api, subtokenize_name(proto.target.name)};
    case TargetKind::internal: return {CalleeKind::unknown_internal, {}};
    case TargetKind::indirect: return {CalleeKind::unknown_indirect, {}};
    }
    return {CalleeKind::unknown_indirect, {}};
}

std::string ArgValue::to_string() const {
    return kind == ValueKind::concrete_int ? std::to_string(number) : text;
}

ArgValue render_value(const AbstractTag& tag) {
    if (tag.kind != TagKind::concrete) return ArgValue::tag(std::string(tag_kind_name(tag.kind)));
    if (tag.is_int()) return ArgValue::integer(std::get<std::int64_t>(tag.concrete));
    if (tag.is_string()) {
        const auto tokens = subtokenize_name(std::get<std::string>(tag.concrete));
        return ArgValue::str("STR:" + (tokens.empty() ? std::string{} : tokens.front()));
    }
    return ArgValue::tag("EMPTY");
}

std::string AugmentedCallSite::to_string() const {
    std::string s;
    switch (callee.kind) {
    case CalleeKind::api:
        for (std::size_t i = 0; i < callee.tokens.size(); ++i) s += (i ? "_" : "") + callee.tokens[i];
        break;
    case CalleeKind::unknown_internal: s = "UnknownInternal"; break;
    case CalleeKind::unknown_indirect: s = "UnknownIndirect"; break;
    case CalleeKind::entry: return "Entry";
    case CalleeKind::sink: return "Sink";
    }
    s += "(";
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + values[i].to_string();
    return s + ")";
}

const PrefixCache::Entry* PrefixCache::find(const std::vector<std::uint32_t>& prefix) const {
    auto it = entries_.find(prefix);
    if (it == entries_.end()) return nullptr;
    ++hits_;
    return &it->second;
}

void PrefixCache::insert(std::vector<std::uint32_t> prefix, Entry entry) {
    entries_.emplace(std::move(prefix), std::move(entry));
}

namespace {

std::vector<const Instruction*> path_instructions(const Cfg& cfg, const Path& path) {
    std::vector<const Instruction*> out;
    out.reserve(path.seqs.size());
    for (auto seq : path.seqs) out.push_back(&cfg.instruction(seq));
    return out;
}

/// Block of every position on the path.
std::vector<BlockId> path_block_of(const Cfg& cfg, const Path& path) {
    std::vector<BlockId> out;
    out.reserve(path.seqs.size());
    for (BlockId b : path.blocks) {
        for (std::size_t i = 0; i < cfg.block(b).seqs.size(); ++i) out.push_back(b);
    }
    return out;
}

PrefixCache::Entry compute_values(const PathAnalysis& pa, std::size_t pos, const CallSiteProto& proto,
                                  const SliceContext& ctx) {
    PrefixCache::Entry entry;
    for (Reg r : proto.arg_registers) {
        bool overflow = false;
        const Propagation prop = argument_value(pa, pos, r, ctx, &overflow);
        entry.values.push_back(render_value(prop.tag));
        entry.overflow = entry.overflow || overflow;
        entry.conflict = entry.conflict || prop.concrete_conflict;
    }
    return entry;
}

void note(AnalysisFlags* flags, const PrefixCache::Entry& e) {
    if (!flags) return;
    flags->overflow = flags->overflow || e.overflow;
    flags->concrete_conflict = flags->concrete_conflict || e.conflict;
}

} // namespace

std::map<std::uint32_t, CallSiteProto> reconstruct_prototypes(const Program& program, const Cfg& cfg,
                                                               const PathSet& paths, const SliceContext& ctx,
                                                               ArityMode mode) {
    struct Seen {
        CallTarget target;
        Arity arity;
        bool disagree = false;
    };
    std::map<std::uint32_t, Seen> seen;
    for (const Path& path : paths.paths) {
        const PathAnalysis pa(path_instructions(cfg, path));
        for (std::size_t pos = 0; pos < pa.size(); ++pos) {
            const Instruction& inst = pa.at(pos);
            if (!inst.is_call) continue;
            const CallTarget t = classify_target(inst, program, &pa, pos, &ctx);
            const Arity a = resolve_arity(t, program, pa, pos, mode);
            auto [it, fresh] = seen.try_emplace(inst.seq, Seen{t, a, false});
            if (fresh) continue;
            Seen& s = it->second;
            if (s.target.kind != t.kind || s.target.name != t.name) s.disagree = true;
            s.arity.count = std::max(s.arity.count, a.count);
        }
    }
    std::map<std::uint32_t, CallSiteProto> out;
    for (auto& [seq, s] : seen) {
        if (s.disagree) {
            CallTarget unresolved{TargetKind::indirect, {}, s.target.reg, true, false};
            out.emplace(seq, reconstruct_callsite(unresolved, Arity{0, true, false, false}));
        } else {
            out.emplace(seq, reconstruct_callsite(s.target, s.arity));
        }
    }
    return out;
}

CallSiteList augment_path(const Cfg& cfg, const Path& path, const std::map<std::uint32_t, CallSiteProto>& protos,
                          const SliceContext& ctx, const AnalysisOptions& options, PrefixCache* cache,
                          AnalysisFlags* flags) {
    CallSiteList out;
    const PathAnalysis pa(path_instructions(cfg, path));
    const auto blocks = path_block_of(cfg, path);
    for (std::size_t pos = 0; pos < pa.size(); ++pos) {
        const Instruction& inst = pa.at(pos);
        if (!inst.is_call) continue;
        const auto it = protos.find(inst.seq);
        CallSiteProto proto;
        if (it != protos.end()) {
            proto = it->second;
        } else {
            const CallTarget t = classify_target(inst, *ctx.program, &pa, pos, &ctx);
            proto = reconstruct_callsite(t, resolve_arity(t, *ctx.program, pa, pos, options.arity_mode));
        }
        AugmentedCallSite site;
        site.callee = callee_of(proto);
        site.origin = {blocks[pos], inst.seq};
        if (options.values) {
            if (cache) {
                std::vector<std::uint32_t> prefix(path.seqs.begin(),
                                                  path.seqs.begin() + static_cast<std::ptrdiff_t>(pos + 1));
                if (const auto* hit = cache->find(prefix)) {
                    site.values = hit->values;
                    note(flags, *hit);
                } else {
                    auto entry = compute_values(pa, pos, proto, ctx);
                    site.values = entry.values;
                    note(flags, entry);
                    cache->insert(std::move(prefix), std::move(entry));
                }
            } else {
                const auto entry = compute_values(pa, pos, proto, ctx);
                site.values = entry.values;
                note(flags, entry);
            }
        }
        out.push_back(std::move(site));
    }
    return out;
}

CallSiteList listing_order_callsites(const Program& program, const Procedure& procedure,
                                     const AnalysisOptions& options, AnalysisFlags* flags) {
    std::vector<const Instruction*> stream;
    std::vector<BlockId> block_of;
    for (std::size_t b = 0; b < procedure.blocks.size(); ++b) {
        for (const auto& inst : procedure.blocks[b].instructions) {
            stream.push_back(&inst);
            block_of.push_back(static_cast<BlockId>(b + 1));
        }
    }
    const SliceContext ctx{&program, &procedure};
    const PathAnalysis pa(std::move(stream));
    CallSiteList out;
    for (std::size_t pos = 0; pos < pa.size(); ++pos) {
        const Instruction& inst = pa.at(pos);
        if (!inst.is_call) continue;
        const CallTarget t = classify_target(inst, program, &pa, pos, &ctx);
        const CallSiteProto proto = reconstruct_callsite(t, resolve_arity(t, program, pa, pos, options.arity_mode));
        if (flags && proto.arity.unknown) ++flags->unknown_arity_calls;
        if (flags && proto.arity.clamped) ++flags->clamped_arity_calls;
        AugmentedCallSite site;
        site.callee = callee_of(proto);
        site.origin = {block_of[pos], inst.seq};
        if (options.values) {
            const auto entry = compute_values(pa, pos, proto, ctx);
            site.values = entry.values;
            note(flags, entry);
        }
        out.push_back(std::move(site));
    }
    return out;
}

SequenceSet to_sequences(const std::vector<CallSiteList>& per_path, std::size_t max_len) {
    if (max_len == 0) max_len = 1;
    SequenceSet out;
    std::set<std::vector<std::pair<Callee, std::vector<ArgValue>>>> seen;
    for (const auto& list : per_path) {
        if (list.empty()) continue;
        CallSiteList seq(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(std::min(max_len, list.size())));
        if (list.size() > max_len) out.truncated = true;
        std::vector<std::pair<Callee, std::vector<ArgValue>>> key;
        key.reserve(seq.size());
        for (const auto& s : seq) key.emplace_back(s.callee, s.values);
        if (seen.insert(std::move(key)).second) out.sequences.push_back(std::move(seq));
    }
    return out;
}

ProcedureAnalysis analyze_procedure(const Program& program, const Procedure& procedure,
                                    const AnalysisOptions& options) {
    ProcedureAnalysis out;
    const Cfg cfg = build_cfg(procedure);
    const SliceContext ctx{&program, &procedure};
    const PathSet raw = enumerate_paths(cfg, options.max_paths);
    out.paths = compress_paths(cfg, raw);

    auto& f = out.flags;
    f.path_count = out.paths.paths.size();
    f.paths_truncated = out.paths.truncated;
    f.sink_unreachable = out.paths.sink_unreachable;
    f.indirect_jump = cfg.has_indirect_jump();
    f.unreachable_blocks = cfg.has_unreachable_blocks();
    f.falls_off_end = cfg.falls_off_end();

    const auto protos = reconstruct_prototypes(program, cfg, out.paths, ctx, options.arity_mode);
    for (const auto& [seq, p] : protos) {
        if (p.arity.unknown) ++f.unknown_arity_calls;
        if (p.arity.clamped) ++f.clamped_arity_calls;
    }

    PrefixCache cache;
    out.per_path.reserve(out.paths.paths.size());
    for (const Path& path : out.paths.paths) {
        out.per_path.push_back(
            augment_path(cfg, path, protos, ctx, options, options.prefix_cache ? &cache : nullptr, &f));
    }

    out.graph = build_augmented_graph(cfg, out.per_path, options.duplication_cap);
    f.duplication_truncated = out.graph.duplication_truncated;

    if (options.listing_order) {
        AnalysisFlags ignored;
        out.sequences = to_sequences({listing_order_callsites(program, procedure, options, &ignored)},
                                     options.max_seq_len);
    } else {
        out.sequences = to_sequences(out.per_path, options.max_seq_len);
    }
    f.sequences_truncated = out.sequences.truncated;
    return out;
}

} // namespace acs
