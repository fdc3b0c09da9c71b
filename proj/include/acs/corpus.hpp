#pragma once

// Dataset plumbing: procedure records and their JSONL form, package-level
// splits, import-name obfuscation and a synthetic listing generator.

#include "acs/asm_ir.hpp"
#include "acs/repr.hpp"
#include "acs/subtokens.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acs {

struct RecordFlags {
    AnalysisFlags analysis;
    std::size_t max_paths = kDefaultMaxPaths;
    std::string successor_order = "ascending";
    std::size_t max_seq_len = kDefaultMaxSeqLen;
    bool obfuscated = false;
    bool no_library_debug = false;
    bool no_values = false;
    bool listing_order = false;
    bool empty_name = false;           // procedure name produced no subtokens
    bool operator==(const RecordFlags&) const = default;
};

struct ProcedureRecord {
    std::string proc_id;               // <package>/<procedure>#<index>
    std::string package;
    std::vector<std::string> name_tokens;
    AugmentedGraph graph;
    SequenceSet sequences;
    RecordFlags flags;
    bool operator==(const ProcedureRecord&) const = default;
};

std::string make_proc_id(std::string_view package, std::string_view procedure, std::size_t index);

/// Analyzes every procedure of `program`; with `jobs` > 1 procedures are
/// analyzed concurrently, results stay in listing order.
std::vector<ProcedureRecord> analyze_program(const Program& program, std::string_view package,
                                             const AnalysisOptions& options, bool obfuscate = false,
                                             unsigned jobs = 1);

/// One JSON object per line, keys in fixed order.
std::string graph_line(const ProcedureRecord& record);
std::string paths_line(const ProcedureRecord& record);
std::string serialize_graphs(std::span<const ProcedureRecord> records);
std::string serialize_paths(std::span<const ProcedureRecord> records);

/// Rebuilds records from matching graphs/paths documents (same proc_id order).
/// Throws IoError naming the offending line.
std::vector<ProcedureRecord> parse_records(std::string_view graphs_jsonl, std::string_view paths_jsonl);

/// Import names become obf_<k> (k = declaration index) and arities are dropped.
Program obfuscate_program(const Program& program);

struct SplitSpec {
    std::array<double, 3> ratios{8.0, 1.0, 1.0};   // train, valid, test
};

/// Parses "8:1:1". Throws Error on malformed or non-positive ratios.
SplitSpec parse_split_ratio(std::string_view text);

struct SplitResult {
    std::array<std::vector<std::string>, 3> packages;
    std::array<std::vector<std::size_t>, 3> records;  // indices into the input
    double deviation = 0.0;            // sum of |count - target| over splits
};

/// Assigns whole packages to train/valid/test so record counts approach the
/// ratios. Exact search up to kExactSplitLimit packages, greedy beyond.
/// Throws Error with fewer than three packages.
SplitResult split_dataset(std::span<const std::string> record_packages, const SplitSpec& spec,
                          std::uint64_t seed);

inline constexpr std::size_t kExactSplitLimit = 14;

/// Deterministic Fisher-Yates over mt19937_64; identical across platforms.
void seeded_shuffle(std::vector<std::string>& items, std::uint64_t seed);

struct SyntheticProcedure {
    std::string name;
    std::vector<std::string> name_tokens;
};

struct SyntheticDocument {
    std::string package;
    std::string text;                  // NAL listing
    std::vector<SyntheticProcedure> procedures;
};

struct SynthOptions {
    std::size_t procedures_per_package = 5;
    bool perturb = true;               // register renaming, block reordering, dead code
};

/// Template-driven listings whose names follow from their API calls and
/// argument constants. Same seed and count give identical text.
std::vector<SyntheticDocument> generate_synthetic_corpus(std::uint64_t seed, std::size_t count,
                                                         const SynthOptions& options = {});

} // namespace acs
