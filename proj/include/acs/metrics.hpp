#pragma once

// Subtoken precision/recall/F1: case-, order- and duplication-insensitive,
// non-alphabetic characters ignored.

#include <span>
#include <string>
#include <vector>

namespace acs {

struct ScoreCounts {
    std::size_t tp = 0;
    std::size_t pred_n = 0;
    std::size_t true_n = 0;

    ScoreCounts& operator+=(const ScoreCounts& o) noexcept {
        tp += o.tp;
        pred_n += o.pred_n;
        true_n += o.true_n;
        return *this;
    }
    bool operator==(const ScoreCounts&) const = default;
};

/// Lowercased, letters only; tokens left empty are dropped. Sorted, unique.
std::vector<std::string> normalize_tokens(std::span<const std::string> tokens);

ScoreCounts score_pair(std::span<const std::string> pred, std::span<const std::string> truth);

struct Scores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

enum class Aggregation { micro, macro };

/// Micro sums counts before dividing; macro averages per-example scores.
/// Zero denominators give 0.
Scores aggregate_corpus(std::span<const ScoreCounts> counts, Aggregation mode = Aggregation::micro);

Scores scores_of(const ScoreCounts& c);

} // namespace acs
