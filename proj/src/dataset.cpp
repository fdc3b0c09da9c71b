#include "acs/corpus.hpp"
#include "acs/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace acs {

Program obfuscate_program(const Program& program) {
    Program out = program;
    std::map<std::string, std::string> rename;
    for (std::size_t k = 0; k < out.imports.size(); ++k) {
        auto& imp = out.imports[k];
        rename.emplace(imp.name, "obf_" + std::to_string(k));
        imp.name = rename.at(imp.name);
        imp.arity.reset();
    }
    if (rename.empty()) return out;
    for (auto& proc : out.procedures) {
        for (auto& block : proc.blocks) {
            for (auto& inst : block.instructions) {
                for (auto& op : inst.operands) {
                    if (auto* l = std::get_if<Label>(&op)) {
                        if (auto it = rename.find(l->name); it != rename.end()) l->name = it->second;
                    } else if (auto* m = std::get_if<MemExpr>(&op)) {
                        if (auto it = rename.find(m->symbol); it != rename.end()) m->symbol = it->second;
                    }
                }
            }
        }
    }
    return out;
}

SplitSpec parse_split_ratio(std::string_view text) {
    SplitSpec spec;
    std::size_t k = 0;
    std::size_t start = 0;
    while (true) {
        const auto end = text.find(':', start);
        const auto part = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        if (k >= 3) throw Error("split ratio '" + std::string(text) + "' needs exactly three parts");
        double v = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc{} || ptr != part.data() + part.size() || !(v > 0) || !std::isfinite(v)) {
            throw Error("split ratio '" + std::string(text) + "' must be three positive numbers");
        }
        spec.ratios[k++] = v;
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    if (k != 3) throw Error("split ratio '" + std::string(text) + "' needs exactly three parts");
    return spec;
}

void seeded_shuffle(std::vector<std::string>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        // Rejection sampling keeps the draw unbiased and platform-independent.
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r = rng();
        while (r >= limit) r = rng();
        std::swap(items[i - 1], items[static_cast<std::size_t>(r % bound)]);
    }
}

namespace {

double deviation(const std::array<double, 3>& counts, const std::array<double, 3>& targets) {
    double d = 0;
    for (int k = 0; k < 3; ++k) d += std::abs(counts[k] - targets[k]);
    return d;
}

class ExactSplit {
public:
    ExactSplit(std::vector<double> sizes, std::array<double, 3> targets)
        : sizes_(std::move(sizes)), targets_(targets), assign_(sizes_.size()), best_(sizes_.size()) {
        suffix_.assign(sizes_.size() + 1, 0.0);
        for (std::size_t i = sizes_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + sizes_[i];
    }

    std::pair<std::vector<int>, double> solve() {
        search(0);
        return {best_, best_dev_};
    }

private:
    void search(std::size_t i) {
        if (i == sizes_.size()) {
            if (std::find(packs_.begin(), packs_.end(), 0) != packs_.end()) return;
            const double d = deviation(counts_, targets_);
            if (d < best_dev_ - 1e-9) {
                best_dev_ = d;
                best_ = assign_;
            }
            return;
        }
        // Packages left must still fill every empty split.
        const auto empty = std::count(packs_.begin(), packs_.end(), 0);
        if (static_cast<std::size_t>(empty) > sizes_.size() - i) return;
        if (lower_bound(i) >= best_dev_ - 1e-9) return;
        for (int k = 0; k < 3; ++k) {
            assign_[i] = k;
            counts_[k] += sizes_[i];
            ++packs_[k];
            search(i + 1);
            --packs_[k];
            counts_[k] -= sizes_[i];
        }
    }

    double lower_bound(std::size_t i) const {
        double over = 0, deficit = 0;
        for (int k = 0; k < 3; ++k) {
            over += std::max(0.0, counts_[k] - targets_[k]);
            deficit += std::max(0.0, targets_[k] - counts_[k]);
        }
        return over + std::max(0.0, deficit - suffix_[i]);
    }

    std::vector<double> sizes_;
    std::array<double, 3> targets_;
    std::vector<double> suffix_;
    std::vector<int> assign_;
    std::vector<int> best_;
    std::array<double, 3> counts_{};
    std::array<int, 3> packs_{};
    double best_dev_ = std::numeric_limits<double>::infinity();
};

std::vector<int> greedy_split(const std::vector<double>& sizes, const std::array<double, 3>& targets) {
    std::vector<std::size_t> order(sizes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sizes[a] > sizes[b]; });
    std::vector<int> assign(sizes.size(), 0);
    std::array<double, 3> counts{};
    std::array<std::vector<std::size_t>, 3> members;
    for (auto i : order) {
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            if (targets[k] - counts[k] > targets[best] - counts[best]) best = k;
        }
        assign[i] = best;
        counts[best] += sizes[i];
        members[best].push_back(i);
    }
    for (int k = 0; k < 3; ++k) {
        if (!members[k].empty()) continue;
        int donor = 0;
        for (int d = 1; d < 3; ++d) {
            if (members[d].size() > members[donor].size()) donor = d;
        }
        // members are in decreasing size; the smallest sits last.
        const auto moved = members[donor].back();
        members[donor].pop_back();
        members[k].push_back(moved);
        assign[moved] = k;
    }
    return assign;
}

} // namespace

SplitResult split_dataset(std::span<const std::string> record_packages, const SplitSpec& spec,
                          std::uint64_t seed) {
    for (double r : spec.ratios) {
        if (!(r > 0)) throw Error("split ratios must be positive");
    }
    std::map<std::string, std::size_t> size_of;
    for (const auto& p : record_packages) ++size_of[p];
    if (size_of.size() < 3) {
        throw Error("need at least 3 packages to split, found " + std::to_string(size_of.size()));
    }
    std::vector<std::string> packages;
    for (const auto& [p, n] : size_of) packages.push_back(p);
    seeded_shuffle(packages, seed);

    const double total = static_cast<double>(record_packages.size());
    const double rsum = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
    std::array<double, 3> targets{};
    for (int k = 0; k < 3; ++k) targets[k] = total * spec.ratios[k] / rsum;

    std::vector<double> sizes;
    for (const auto& p : packages) sizes.push_back(static_cast<double>(size_of.at(p)));

    std::vector<int> assign;
    if (packages.size() <= kExactSplitLimit) {
        assign = ExactSplit(sizes, targets).solve().first;
    } else {
        assign = greedy_split(sizes, targets);
    }

    SplitResult out;
    std::map<std::string, int> split_of;
    std::array<double, 3> counts{};
    for (std::size_t i = 0; i < packages.size(); ++i) {
        out.packages[assign[i]].push_back(packages[i]);
        split_of.emplace(packages[i], assign[i]);
        counts[assign[i]] += sizes[i];
    }
    for (std::size_t i = 0; i < record_packages.size(); ++i) out.records[split_of.at(record_packages[i])].push_back(i);
    out.deviation = deviation(counts, targets);
    return out;
}

} // namespace acs
