// acs: analyze NAL listings into augmented call-site JSONL, score name
// predictions, generate synthetic corpora, split datasets, summarize output.

#include "acs/corpus.hpp"
#include "acs/error.hpp"
#include "acs/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw acs::IoError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw acs::IoError("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw acs::IoError("write failed for '" + p.string() + "'");
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".nal") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    return files;
}

/// Non-blank lines of a JSONL document, parsed, with their line numbers.
std::vector<std::pair<std::size_t, json>> read_jsonl(const fs::path& p) {
    std::istringstream in(read_file(p));
    std::vector<std::pair<std::size_t, json>> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.emplace_back(n, json::parse(line));
        } catch (const std::exception& e) {
            throw acs::IoError(p.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

struct AnalyzeArgs {
    std::vector<std::string> inputs;
    std::string out_graphs;
    std::string out_paths;
    std::string package;
    bool obfuscate = false;
    bool no_library_debug = false;
    bool no_values = false;
    bool listing_order = false;
    std::size_t max_paths = acs::kDefaultMaxPaths;
    std::size_t max_seq_len = acs::kDefaultMaxSeqLen;
    unsigned jobs = 1;
};

int run_analyze(const AnalyzeArgs& a) {
    const auto files = expand_inputs(a.inputs);
    if (!a.package.empty() && files.size() != 1) throw acs::Error("--package needs exactly one input file");
    acs::AnalysisOptions opt;
    opt.arity_mode = a.no_library_debug ? acs::ArityMode::no_library_debug : acs::ArityMode::library_debug;
    opt.values = !a.no_values;
    opt.listing_order = a.listing_order;
    opt.max_paths = std::max<std::size_t>(1, a.max_paths);
    opt.max_seq_len = std::max<std::size_t>(1, a.max_seq_len);

    std::string graphs, paths;
    for (const auto& f : files) {
        acs::Program program;
        try {
            program = acs::parse_listing(read_file(f));
        } catch (const acs::ParseError& e) {
            throw acs::Error(f.string() + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                             e.message());
        }
        const std::string package = a.package.empty() ? f.stem().string() : a.package;
        std::vector<acs::ProcedureRecord> records;
        try {
            records = acs::analyze_program(program, package, opt, a.obfuscate, a.jobs);
        } catch (const acs::Error& e) {
            throw acs::Error(f.string() + ": " + e.what());
        }
        graphs += acs::serialize_graphs(records);
        paths += acs::serialize_paths(records);
    }
    write_file(a.out_graphs, graphs);
    write_file(a.out_paths, paths);
    return 0;
}

int run_score(const std::string& pred_path, const std::string& truth_path, bool macro) {
    std::map<std::string, std::vector<std::string>> preds;
    for (const auto& [line, j] : read_jsonl(pred_path)) {
        try {
            preds[j.at("proc_id").get<std::string>()] = j.at("pred_tokens").get<std::vector<std::string>>();
        } catch (const std::exception& e) {
            throw acs::IoError(pred_path + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    std::vector<acs::ScoreCounts> counts;
    std::size_t missing = 0;
    std::map<std::string, bool> seen;
    for (const auto& [line, j] : read_jsonl(truth_path)) {
        std::string id;
        std::vector<std::string> truth;
        try {
            id = j.at("proc_id").get<std::string>();
            truth = j.at("name_tokens").get<std::vector<std::string>>();
        } catch (const std::exception& e) {
            throw acs::IoError(truth_path + ":" + std::to_string(line) + ": " + e.what());
        }
        seen[id] = true;
        const auto it = preds.find(id);
        if (it == preds.end()) ++missing;
        const std::vector<std::string> empty;
        counts.push_back(acs::score_pair(it == preds.end() ? empty : it->second, truth));
    }
    std::size_t unmatched = 0;
    for (const auto& [id, toks] : preds) unmatched += seen.count(id) ? 0 : 1;
    acs::ScoreCounts total;
    for (const auto& c : counts) total += c;
    const auto s = acs::aggregate_corpus(counts, macro ? acs::Aggregation::macro : acs::Aggregation::micro);
    json report;
    report["aggregation"] = macro ? "macro" : "micro";
    report["examples"] = counts.size();
    report["precision"] = s.precision;
    report["recall"] = s.recall;
    report["f1"] = s.f1;
    report["tp"] = total.tp;
    report["pred_n"] = total.pred_n;
    report["true_n"] = total.true_n;
    report["missing_predictions"] = missing;
    report["unmatched_predictions"] = unmatched;
    std::cout << report.dump() << "\n";
    return 0;
}

int run_synth(std::uint64_t seed, std::size_t count, const std::string& out_dir, std::size_t per_package,
              bool no_perturb) {
    acs::SynthOptions opt;
    opt.procedures_per_package = per_package;
    opt.perturb = !no_perturb;
    const auto docs = acs::generate_synthetic_corpus(seed, count, opt);
    std::string labels;
    for (const auto& d : docs) {
        write_file(fs::path(out_dir) / (d.package + ".nal"), d.text);
        for (std::size_t i = 0; i < d.procedures.size(); ++i) {
            json j;
            j["proc_id"] = acs::make_proc_id(d.package, d.procedures[i].name, i);
            j["package"] = d.package;
            j["name_tokens"] = d.procedures[i].name_tokens;
            labels += j.dump() + "\n";
        }
    }
    write_file(fs::path(out_dir) / "labels.jsonl", labels);
    return 0;
}

int run_split(const std::string& ratio, std::uint64_t seed, const std::string& graphs_path,
              const std::string& paths_path, const std::string& out_dir) {
    const auto spec = acs::parse_split_ratio(ratio);
    const auto graph_lines = read_jsonl(graphs_path);
    std::vector<std::pair<std::size_t, json>> path_lines;
    if (!paths_path.empty()) {
        path_lines = read_jsonl(paths_path);
        if (path_lines.size() != graph_lines.size()) throw acs::IoError("graphs and paths record counts differ");
    }
    std::vector<std::string> packages;
    for (const auto& [line, j] : graph_lines) {
        try {
            packages.push_back(j.at("package").get<std::string>());
        } catch (const std::exception& e) {
            throw acs::IoError(graphs_path + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    const auto result = acs::split_dataset(packages, spec, seed);
    static const std::array<const char*, 3> names = {"train", "valid", "test"};
    json summary;
    for (int k = 0; k < 3; ++k) {
        std::string g, p;
        for (auto i : result.records[k]) {
            g += graph_lines[i].second.dump() + "\n";
            if (!path_lines.empty()) p += path_lines[i].second.dump() + "\n";
        }
        write_file(fs::path(out_dir) / (std::string(names[k]) + ".graphs.jsonl"), g);
        if (!path_lines.empty()) write_file(fs::path(out_dir) / (std::string(names[k]) + ".paths.jsonl"), p);
        json s;
        s["packages"] = result.packages[k];
        s["records"] = result.records[k].size();
        summary[names[k]] = std::move(s);
    }
    summary["deviation"] = result.deviation;
    std::cout << summary.dump() << "\n";
    return 0;
}

int run_stats(const std::string& input) {
    const auto lines = read_jsonl(input);
    double nodes = 0, edges = 0, seqs = 0, seq_len = 0, path_count = 0;
    std::size_t seq_total = 0, graphs = 0, paths = 0;
    for (const auto& [line, j] : lines) {
        if (j.contains("nodes")) {
            ++graphs;
            nodes += static_cast<double>(j.at("nodes").size()) - 2.0;   // Entry and Sink
            edges += static_cast<double>(j.at("edges").size());
        }
        if (j.contains("sequences")) {
            ++paths;
            seqs += static_cast<double>(j.at("sequences").size());
            for (const auto& s : j.at("sequences")) seq_len += static_cast<double>(s.size());
            seq_total += j.at("sequences").size();
        }
        if (j.contains("flags")) path_count += j.at("flags").value("path_count", 0.0);
    }
    const auto avg = [](double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : 0.0; };
    json out;
    out["procedures"] = lines.size();
    if (graphs) {
        out["avg_callsite_nodes"] = avg(nodes, graphs);
        out["avg_edges"] = avg(edges, graphs);
    }
    if (paths) {
        out["avg_sequences"] = avg(seqs, paths);
        out["avg_sequence_length"] = avg(seq_len, seq_total);
    }
    out["avg_path_count"] = avg(path_count, lines.size());
    std::cout << out.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"augmented call-site extraction toolkit"};
    app.require_subcommand(1);

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Analyze NAL listings into graphs/paths JSONL");
    analyze->add_option("--input", an.inputs, "NAL file or directory of .nal files")->required();
    analyze->add_option("--out-graphs", an.out_graphs, "graphs.jsonl output")->required();
    analyze->add_option("--out-paths", an.out_paths, "paths.jsonl output")->required();
    analyze->add_option("--package", an.package, "package id (default: input file stem)");
    analyze->add_flag("--obfuscate", an.obfuscate, "replace import names and drop declared arities");
    analyze->add_flag("--no-library-debug", an.no_library_debug, "infer external arity from caller code only");
    analyze->add_flag("--no-values", an.no_values, "emit callee tokens only");
    analyze->add_flag("--listing-order", an.listing_order, "sequences from raw listing order");
    analyze->add_option("--max-paths", an.max_paths, "path enumeration cap")->capture_default_str();
    analyze->add_option("--max-seq-len", an.max_seq_len, "call sites kept per sequence")->capture_default_str();
    analyze->add_option("--jobs", an.jobs, "procedures analyzed concurrently")->capture_default_str();

    std::string pred, truth;
    bool macro = false;
    auto* score = app.add_subcommand("score", "Subtoken precision/recall/F1 of predictions");
    score->add_option("--pred", pred, "prediction JSONL {proc_id, pred_tokens}")->required();
    score->add_option("--truth", truth, "truth JSONL {proc_id, name_tokens}")->required();
    score->add_flag("--macro", macro, "average per-example scores instead of summing counts");

    std::uint64_t seed = 1;
    std::size_t count = 100, per_package = 5;
    std::string out_dir;
    bool no_perturb = false;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic NAL corpus");
    synth->add_option("--seed", seed)->capture_default_str();
    synth->add_option("--count", count, "procedure count")->capture_default_str();
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--per-package", per_package, "procedures per package file")->capture_default_str();
    synth->add_flag("--no-perturb", no_perturb, "disable renaming, reordering and dead code");

    std::string ratio = "8:1:1", graphs_in, paths_in, split_dir;
    std::uint64_t split_seed = 1;
    auto* split = app.add_subcommand("split", "Package-level train/valid/test split");
    split->add_option("--ratio", ratio)->capture_default_str();
    split->add_option("--seed", split_seed)->capture_default_str();
    split->add_option("--graphs", graphs_in, "graphs.jsonl input")->required();
    split->add_option("--paths", paths_in, "paths.jsonl input");
    split->add_option("--out-dir", split_dir, "output directory")->required();

    std::string stats_in;
    auto* stats = app.add_subcommand("stats", "Per-procedure averages of a graphs or paths JSONL");
    stats->add_option("--input", stats_in)->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*analyze) return run_analyze(an);
        if (*score) return run_score(pred, truth, macro);
        if (*synth) return run_synth(seed, count, out_dir, per_package, no_perturb);
        if (*split) return run_split(ratio, split_seed, graphs_in, paths_in, split_dir);
        if (*stats) return run_stats(stats_in);
    } catch (const std::exception& e) {
        std::cerr << "acs: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
