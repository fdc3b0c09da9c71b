#include "acs/metrics.hpp"

#include <algorithm>
#include <cctype>

namespace acs {

std::vector<std::string> normalize_tokens(std::span<const std::string> tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) {
        std::string s;
        for (char c : t) {
            const auto u = static_cast<unsigned char>(c);
            if (std::isalpha(u)) s.push_back(static_cast<char>(std::tolower(u)));
        }
        if (!s.empty()) out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ScoreCounts score_pair(std::span<const std::string> pred, std::span<const std::string> truth) {
    const auto p = normalize_tokens(pred);
    const auto t = normalize_tokens(truth);
    std::vector<std::string> common;
    std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(common));
    return {common.size(), p.size(), t.size()};
}

namespace {

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

} // namespace

Scores scores_of(const ScoreCounts& c) {
    Scores s;
    s.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.pred_n));
    s.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.true_n));
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

Scores aggregate_corpus(std::span<const ScoreCounts> counts, Aggregation mode) {
    if (mode == Aggregation::micro) {
        ScoreCounts total;
        for (const auto& c : counts) total += c;
        return scores_of(total);
    }
    Scores s;
    if (counts.empty()) return s;
    for (const auto& c : counts) {
        const Scores e = scores_of(c);
        s.precision += e.precision;
        s.recall += e.recall;
        s.f1 += e.f1;
    }
    const auto n = static_cast<double>(counts.size());
    s.precision /= n;
    s.recall /= n;
    s.f1 /= n;
    return s;
}

} // namespace acs
