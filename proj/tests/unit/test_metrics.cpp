#include "acs/metrics.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cctype>

using namespace acs;

namespace {

using V = std::vector<std::string>;

Scores pair(const V& pred, const V& truth) { return scores_of(score_pair(pred, truth)); }

// Set-based reference scorer.
ScoreCounts reference(const V& pred, const V& truth) {
    auto norm = [](const V& in) {
        std::set<std::string> out;
        for (const auto& t : in) {
            std::string s;
            for (char c : t) {
                if (std::isalpha(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            }
            if (!s.empty()) out.insert(s);
        }
        return out;
    };
    const auto p = norm(pred), t = norm(truth);
    std::size_t tp = 0;
    for (const auto& x : p) tp += t.count(x);
    return {tp, p.size(), t.size()};
}

V random_tokens(oracle::Gen& g) {
    static const char* pool[] = {"open", "File", "read", "sock", "i18n", "x2", "42", "close", "OPEN", "buf_"};
    V out;
    const auto n = g.below(6);
    for (std::uint64_t k = 0; k < n; ++k) out.push_back(pool[g.below(std::size(pool))]);
    return out;
}

} // namespace

TEST_CASE("reference examples") {
    const auto a = pair({"open"}, {"open", "file"});
    CHECK(a.precision == doctest::Approx(1.0));
    CHECK(a.recall == doctest::Approx(0.5));
    CHECK(a.f1 == doctest::Approx(2.0 / 3.0));
    const auto b = pair({"file", "open", "input", "file"}, {"open", "file"});
    CHECK(b.precision == doctest::Approx(2.0 / 3.0));
    CHECK(b.recall == doctest::Approx(1.0));
    CHECK(b.f1 == doctest::Approx(0.8));
}

TEST_CASE("normalization") {
    CHECK(normalize_tokens(V{"i18n"}) == V{"in"});
    CHECK(normalize_tokens(V{"Open", "OPEN", "42", "", "file"}) == V{"file", "open"});
    CHECK(score_pair(V{"42"}, V{"open"}) == ScoreCounts{0, 0, 1});
}

TEST_CASE("corpus aggregation") {
    const std::vector<ScoreCounts> one{score_pair(V{"open"}, V{"open", "file"})};
    const auto s = aggregate_corpus(one);
    CHECK(s.precision == doctest::Approx(1.0));
    CHECK(s.recall == doctest::Approx(0.5));

    const auto empty = aggregate_corpus({});
    CHECK(empty.precision == 0);
    CHECK(empty.recall == 0);
    CHECK(empty.f1 == 0);

    // {tp 1, pred 1, true 2} and {tp 2, pred 3, true 2}
    const std::vector<ScoreCounts> two{score_pair(V{"open"}, V{"open", "file"}),
                                       score_pair(V{"file", "open", "input"}, V{"open", "file"})};
    const auto micro = aggregate_corpus(two);
    CHECK(micro.precision == doctest::Approx(0.75));
    CHECK(micro.recall == doctest::Approx(0.75));
    CHECK(micro.f1 == doctest::Approx(0.75));
    const auto macro = aggregate_corpus(two, Aggregation::macro);
    CHECK(macro.precision == doctest::Approx((1.0 + 2.0 / 3.0) / 2));
    CHECK(macro.recall == doctest::Approx(0.75));
    CHECK(macro.f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2));
}

TEST_CASE("zero denominators") {
    CHECK(pair({}, {"open"}).precision == 0);
    CHECK(pair({"open"}, {}).recall == 0);
    CHECK(pair({}, {}).f1 == 0);
}

TEST_CASE("scores agree with a set-based reference and are invariant") {
    for (std::uint64_t seed = 1; seed <= 500; ++seed) {
        oracle::Gen g(seed);
        const auto pred = random_tokens(g);
        const auto truth = random_tokens(g);
        CAPTURE(seed);
        const auto c = score_pair(pred, truth);
        CHECK(c == reference(pred, truth));

        auto shuffled = pred;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(score_pair(shuffled, truth) == c);
        auto doubled = pred;
        doubled.insert(doubled.end(), pred.begin(), pred.end());
        CHECK(score_pair(doubled, truth) == c);
        auto upper = pred;
        for (auto& t : upper) std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::toupper(ch); });
        CHECK(score_pair(upper, truth) == c);

        const auto s = scores_of(c);
        for (double v : {s.precision, s.recall, s.f1}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(s.f1 <= std::max(s.precision, s.recall) + 1e-12);
        CHECK(s.f1 >= std::min(s.precision, s.recall) - 1e-12);
        CHECK(scores_of(score_pair(truth, truth)).f1 == (normalize_tokens(truth).empty() ? 0.0 : 1.0));
    }
}
