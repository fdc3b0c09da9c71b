#include "acs/subtokens.hpp"

#include <cctype>

namespace acs {

namespace {

enum class CharClass { sep, lower, upper, digit };

CharClass classify(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (std::islower(u)) return CharClass::lower;
    if (std::isupper(u)) return CharClass::upper;
    if (std::isdigit(u)) return CharClass::digit;
    return CharClass::sep;
}

} // namespace

std::vector<std::string> subtokenize_name(std::string_view name) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (std::size_t i = 0; i < name.size(); ++i) {
        const CharClass c = classify(name[i]);
        if (c == CharClass::sep) {
            flush();
            continue;
        }
        if (!cur.empty()) {
            const CharClass prev = classify(name[i - 1]);
            const bool next_lower = i + 1 < name.size() && classify(name[i + 1]) == CharClass::lower;
            // fooBar | foo1 | 1foo | HTTPServer
            if ((prev == CharClass::lower && c == CharClass::upper) ||
                ((prev == CharClass::digit) != (c == CharClass::digit)) ||
                (prev == CharClass::upper && c == CharClass::upper && next_lower)) {
                flush();
            }
        }
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(name[i]))));
    }
    flush();
    return out;
}

} // namespace acs
