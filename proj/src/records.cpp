#include "acs/corpus.hpp"
#include "acs/error.hpp"

#include <json.hpp>

#include <atomic>
#include <exception>
#include <thread>

namespace acs {

using json = nlohmann::ordered_json;

std::string make_proc_id(std::string_view package, std::string_view procedure, std::size_t index) {
    return std::string(package) + "/" + std::string(procedure) + "#" + std::to_string(index);
}

std::vector<ProcedureRecord> analyze_program(const Program& program, std::string_view package,
                                             const AnalysisOptions& options, bool obfuscate, unsigned jobs) {
    const Program obf = obfuscate ? obfuscate_program(program) : Program{};
    const Program& source = obfuscate ? obf : program;
    const auto n = source.procedures.size();
    std::vector<ProcedureRecord> records(n);
    std::vector<std::exception_ptr> errors(n);

    auto work = [&](std::size_t i) {
        try {
            const Procedure& proc = source.procedures[i];
            ProcedureAnalysis a = analyze_procedure(source, proc, options);
            ProcedureRecord& r = records[i];
            r.proc_id = make_proc_id(package, proc.name, i);
            r.package = std::string(package);
            r.name_tokens = proc.anonymous() ? std::vector<std::string>{} : subtokenize_name(proc.name);
            r.graph = std::move(a.graph);
            r.sequences = std::move(a.sequences);
            r.flags.analysis = a.flags;
            r.flags.max_paths = options.max_paths;
            r.flags.max_seq_len = options.max_seq_len;
            r.flags.obfuscated = obfuscate;
            r.flags.no_library_debug = options.arity_mode == ArityMode::no_library_debug;
            r.flags.no_values = !options.values;
            r.flags.listing_order = options.listing_order;
            r.flags.empty_name = r.name_tokens.empty();
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < std::min<std::size_t>(jobs, n); ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) work(i);
            });
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw AnalysisError("procedure '" + source.procedures[i].name + "': " + e.what());
        }
    }
    return records;
}

namespace {

json value_json(const ArgValue& v) {
    json j;
    switch (v.kind) {
    case ValueKind::tag: j["kind"] = "tag"; j["v"] = v.text; break;
    case ValueKind::concrete_int: j["kind"] = "concrete_int"; j["v"] = v.number; break;
    case ValueKind::concrete_str: j["kind"] = "concrete_str"; j["v"] = v.text; break;
    }
    return j;
}

json callee_json(const Callee& c) {
    switch (c.kind) {
    case CalleeKind::api: return c.tokens;
    case CalleeKind::unknown_internal: return "unknown_internal";
    case CalleeKind::unknown_indirect: return "unknown_indirect";
    case CalleeKind::entry: return "entry";
    case CalleeKind::sink: return "sink";
    }
    return "unknown_indirect";
}

json site_json(const AugmentedCallSite& s, std::optional<std::uint32_t> id) {
    json j;
    if (id) j["id"] = *id;
    j["callee"] = callee_json(s.callee);
    json values = json::array();
    for (const auto& v : s.values) values.push_back(value_json(v));
    j["values"] = std::move(values);
    const bool marker = s.callee.kind == CalleeKind::entry || s.callee.kind == CalleeKind::sink;
    j["origin"] = marker ? json(nullptr) : json::array({s.origin.block, s.origin.seq});
    return j;
}

json flags_json(const RecordFlags& f) {
    json j;
    j["max_paths"] = f.max_paths;
    j["successor_order"] = f.successor_order;
    j["max_seq_len"] = f.max_seq_len;
    j["path_count"] = f.analysis.path_count;
    j["paths_truncated"] = f.analysis.paths_truncated;
    j["sink_unreachable"] = f.analysis.sink_unreachable;
    j["indirect_jump"] = f.analysis.indirect_jump;
    j["unreachable_blocks"] = f.analysis.unreachable_blocks;
    j["falls_off_end"] = f.analysis.falls_off_end;
    j["duplication_truncated"] = f.analysis.duplication_truncated;
    j["sequences_truncated"] = f.analysis.sequences_truncated;
    j["overflow"] = f.analysis.overflow;
    j["concrete_conflict"] = f.analysis.concrete_conflict;
    j["unknown_arity_calls"] = f.analysis.unknown_arity_calls;
    j["clamped_arity_calls"] = f.analysis.clamped_arity_calls;
    j["obfuscated"] = f.obfuscated;
    j["no_library_debug"] = f.no_library_debug;
    j["no_values"] = f.no_values;
    j["listing_order"] = f.listing_order;
    j["empty_name"] = f.empty_name;
    return j;
}

json header(const ProcedureRecord& r) {
    json j;
    j["proc_id"] = r.proc_id;
    j["package"] = r.package;
    j["name_tokens"] = r.name_tokens;
    return j;
}

// Parsing side.

ArgValue value_from(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "tag") return ArgValue::tag(j.at("v").get<std::string>());
    if (kind == "concrete_int") return ArgValue::integer(j.at("v").get<std::int64_t>());
    if (kind == "concrete_str") return ArgValue::str(j.at("v").get<std::string>());
    throw std::invalid_argument("unknown value kind '" + kind + "'");
}

Callee callee_from(const json& j) {
    if (j.is_array()) return {CalleeKind::api, j.get<std::vector<std::string>>()};
    const auto s = j.get<std::string>();
    if (s == "unknown_internal") return {CalleeKind::unknown_internal, {}};
    if (s == "unknown_indirect") return {CalleeKind::unknown_indirect, {}};
    if (s == "entry") return {CalleeKind::entry, {}};
    if (s == "sink") return {CalleeKind::sink, {}};
    throw std::invalid_argument("unknown callee marker '" + s + "'");
}

AugmentedCallSite site_from(const json& j) {
    AugmentedCallSite s;
    s.callee = callee_from(j.at("callee"));
    for (const auto& v : j.at("values")) s.values.push_back(value_from(v));
    const auto& o = j.at("origin");
    if (!o.is_null()) s.origin = {o.at(0).get<BlockId>(), o.at(1).get<std::uint32_t>()};
    return s;
}

RecordFlags flags_from(const json& j) {
    RecordFlags f;
    f.max_paths = j.at("max_paths").get<std::size_t>();
    f.successor_order = j.at("successor_order").get<std::string>();
    f.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    f.analysis.path_count = j.at("path_count").get<std::size_t>();
    f.analysis.paths_truncated = j.at("paths_truncated").get<bool>();
    f.analysis.sink_unreachable = j.at("sink_unreachable").get<bool>();
    f.analysis.indirect_jump = j.at("indirect_jump").get<bool>();
    f.analysis.unreachable_blocks = j.at("unreachable_blocks").get<bool>();
    f.analysis.falls_off_end = j.at("falls_off_end").get<bool>();
    f.analysis.duplication_truncated = j.at("duplication_truncated").get<bool>();
    f.analysis.sequences_truncated = j.at("sequences_truncated").get<bool>();
    f.analysis.overflow = j.at("overflow").get<bool>();
    f.analysis.concrete_conflict = j.at("concrete_conflict").get<bool>();
    f.analysis.unknown_arity_calls = j.at("unknown_arity_calls").get<std::size_t>();
    f.analysis.clamped_arity_calls = j.at("clamped_arity_calls").get<std::size_t>();
    f.obfuscated = j.at("obfuscated").get<bool>();
    f.no_library_debug = j.at("no_library_debug").get<bool>();
    f.no_values = j.at("no_values").get<bool>();
    f.listing_order = j.at("listing_order").get<bool>();
    f.empty_name = j.at("empty_name").get<bool>();
    return f;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

} // namespace

std::string graph_line(const ProcedureRecord& r) {
    json j = header(r);
    json nodes = json::array();
    for (std::uint32_t id = 0; id < r.graph.nodes.size(); ++id) nodes.push_back(site_json(r.graph.nodes[id], id));
    j["nodes"] = std::move(nodes);
    json edges = json::array();
    for (auto [u, v] : r.graph.edges) edges.push_back(json::array({u, v}));
    j["edges"] = std::move(edges);
    j["flags"] = flags_json(r.flags);
    return j.dump();
}

std::string paths_line(const ProcedureRecord& r) {
    json j = header(r);
    json seqs = json::array();
    for (const auto& seq : r.sequences.sequences) {
        json s = json::array();
        for (const auto& site : seq) s.push_back(site_json(site, std::nullopt));
        seqs.push_back(std::move(s));
    }
    j["sequences"] = std::move(seqs);
    j["flags"] = flags_json(r.flags);
    return j.dump();
}

std::string serialize_graphs(std::span<const ProcedureRecord> records) {
    std::string out;
    for (const auto& r : records) out += graph_line(r) + "\n";
    return out;
}

std::string serialize_paths(std::span<const ProcedureRecord> records) {
    std::string out;
    for (const auto& r : records) out += paths_line(r) + "\n";
    return out;
}

std::vector<ProcedureRecord> parse_records(std::string_view graphs_jsonl, std::string_view paths_jsonl) {
    std::vector<std::pair<std::size_t, std::string_view>> graphs;
    std::vector<std::pair<std::size_t, std::string_view>> paths;
    auto collect = [](std::string_view text, auto& out) {
        std::size_t n = 0;
        for (auto line : split_lines(text)) {
            ++n;
            if (line.find_first_not_of(" \t\r") != std::string_view::npos) out.emplace_back(n, line);
        }
    };
    collect(graphs_jsonl, graphs);
    collect(paths_jsonl, paths);
    if (graphs.size() != paths.size()) {
        throw IoError("graphs and paths documents hold " + std::to_string(graphs.size()) + " and " +
                      std::to_string(paths.size()) + " records");
    }
    std::vector<ProcedureRecord> out;
    out.reserve(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        ProcedureRecord r;
        std::size_t line = graphs[i].first;
        const char* doc = "graphs";
        try {
            const json g = json::parse(graphs[i].second);
            r.proc_id = g.at("proc_id").get<std::string>();
            r.package = g.at("package").get<std::string>();
            r.name_tokens = g.at("name_tokens").get<std::vector<std::string>>();
            for (const auto& n : g.at("nodes")) r.graph.nodes.push_back(site_from(n));
            for (const auto& e : g.at("edges")) {
                r.graph.edges.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>());
            }
            r.flags = flags_from(g.at("flags"));
            r.graph.duplication_truncated = r.flags.analysis.duplication_truncated;
            r.graph.rebuild_groups();

            line = paths[i].first;
            doc = "paths";
            const json p = json::parse(paths[i].second);
            if (p.at("proc_id").get<std::string>() != r.proc_id) {
                throw std::invalid_argument("proc_id '" + p.at("proc_id").get<std::string>() +
                                            "' does not match graphs record '" + r.proc_id + "'");
            }
            for (const auto& s : p.at("sequences")) {
                CallSiteList seq;
                for (const auto& site : s) seq.push_back(site_from(site));
                r.sequences.sequences.push_back(std::move(seq));
            }
            r.sequences.truncated = r.flags.analysis.sequences_truncated;
        } catch (const std::exception& e) {
            throw IoError(std::string(doc) + " line " + std::to_string(line) + ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace acs
