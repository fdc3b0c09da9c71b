#include "acs/asm_ir.hpp"
#include "acs/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>
#include <set>
#include <string>

namespace acs {

namespace {

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' || c == '@';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' || c == '@';
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(s.front())) return false;
    return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Tokens that name a register we do not model (SIMD, x87, segment, control,
// out-of-range rN) must not silently become symbols.
bool looks_like_register(std::string_view token) {
    static const std::regex kRegLike(
        R"(^([xyz]mm[0-9]+|mm[0-7]|st[0-7]?|[cdefgs]s|[cd]r[0-9]+|r[0-9]+[a-z]?)$)",
        std::regex::icase);
    return std::regex_match(token.begin(), token.end(), kRegLike);
}

/// A slice of the current line with its starting column (0-based).
struct Piece {
    std::string_view text;
    std::size_t col = 0;
};

Piece trim(Piece p) {
    while (!p.text.empty() && std::isspace(static_cast<unsigned char>(p.text.front()))) {
        p.text.remove_prefix(1);
        ++p.col;
    }
    while (!p.text.empty() && std::isspace(static_cast<unsigned char>(p.text.back()))) {
        p.text.remove_suffix(1);
    }
    return p;
}

/// Splits on top-level occurrences of `sep` (outside brackets and quotes).
std::vector<Piece> split_top(Piece p, char sep) {
    std::vector<Piece> out;
    int depth = 0;
    bool quoted = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < p.text.size(); ++i) {
        const char c = p.text[i];
        if (c == '"') quoted = !quoted;
        if (quoted) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim({p.text.substr(start, i - start), p.col + start}));
            start = i + 1;
        }
    }
    out.push_back(trim({p.text.substr(start), p.col + start}));
    return out;
}

class LineParser {
public:
    LineParser(std::size_t line) : line_(line) {}

    [[noreturn]] void fail(std::size_t col0, const std::string& msg) const {
        throw ParseError(line_, col0 + 1, msg);
    }

    std::int64_t parse_number(Piece p) const {
        std::string_view s = p.text;
        bool negative = false;
        if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
            negative = s.front() == '-';
            s.remove_prefix(1);
        }
        if (s.empty()) fail(p.col, "expected a number");
        int base = 10;
        if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
            base = 16;
            s.remove_prefix(2);
        } else if (s.size() > 1 && (s.back() == 'h' || s.back() == 'H')) {
            base = 16;
            s.remove_suffix(1);
        }
        std::uint64_t value = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            fail(p.col, "malformed number '" + std::string(p.text) + "'");
        }
        const auto signed_value = static_cast<std::int64_t>(value);
        return negative ? static_cast<std::int64_t>(0 - value) : signed_value;
    }

    static bool starts_number(std::string_view s) {
        if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
        return !s.empty() && std::isdigit(static_cast<unsigned char>(s.front()));
    }

    Reg parse_register_token(Piece p) const {
        auto r = try_canonicalize_register(p.text);
        if (!r) fail(p.col, "unknown register '" + std::string(p.text) + "'");
        return *r;
    }

    MemExpr parse_memory(Piece p) const {
        // p.text is the bracket interior.
        MemExpr mem;
        bool any_term = false;
        std::size_t i = 0;
        const auto& s = p.text;
        while (i < s.size()) {
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            if (i >= s.size()) break;
            int sign = 1;
            if (s[i] == '+' || s[i] == '-') {
                sign = s[i] == '-' ? -1 : 1;
                ++i;
                while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            } else if (any_term) {
                fail(p.col + i, "expected '+' or '-' in memory operand");
            }
            // term extends up to the next top-level +/-
            std::size_t end = i;
            while (end < s.size() && s[end] != '+' && s[end] != '-') ++end;
            Piece term = trim({s.substr(i, end - i), p.col + i});
            if (term.text.empty()) fail(p.col + i, "empty term in memory operand");
            add_memory_term(mem, term, sign);
            any_term = true;
            i = end;
        }
        if (!any_term) fail(p.col, "empty memory operand");
        if (!mem.base && mem.index && mem.scale == 1) {
            mem.base = mem.index;
            mem.index.reset();
        }
        if (!mem.index) mem.scale = 1;
        return mem;
    }

    void add_memory_term(MemExpr& mem, Piece term, int sign) const {
        auto star = term.text.find('*');
        if (star != std::string_view::npos) {
            Piece lhs = trim({term.text.substr(0, star), term.col});
            Piece rhs = trim({term.text.substr(star + 1), term.col + star + 1});
            Piece reg_piece = lhs;
            Piece scale_piece = rhs;
            if (starts_number(lhs.text)) std::swap(reg_piece, scale_piece);
            if (sign < 0) fail(term.col, "negated index register");
            const Reg r = parse_register_token(reg_piece);
            const auto scale = parse_number(scale_piece);
            if (scale != 1 && scale != 2 && scale != 4 && scale != 8) {
                fail(scale_piece.col, "scale must be 1, 2, 4 or 8");
            }
            if (mem.index) fail(term.col, "two index registers in memory operand");
            mem.index = r;
            mem.scale = static_cast<int>(scale);
            return;
        }
        if (starts_number(term.text)) {
            const auto v = parse_number(term);
            mem.disp = static_cast<std::int64_t>(static_cast<std::uint64_t>(mem.disp) +
                                                 (sign < 0 ? 0 - static_cast<std::uint64_t>(v) : static_cast<std::uint64_t>(v)));
            return;
        }
        if (auto r = try_canonicalize_register(term.text)) {
            if (sign < 0) fail(term.col, "negated register in memory operand");
            if (!mem.base) {
                mem.base = *r;
            } else if (!mem.index) {
                mem.index = *r;
                mem.scale = 1;
            } else {
                fail(term.col, "too many registers in memory operand");
            }
            return;
        }
        if (looks_like_register(term.text)) {
            fail(term.col, "unknown register '" + std::string(term.text) + "'");
        }
        if (!is_identifier(term.text)) fail(term.col, "malformed memory term '" + std::string(term.text) + "'");
        if (sign < 0) fail(term.col, "negated symbol in memory operand");
        if (!mem.symbol.empty()) fail(term.col, "two symbols in memory operand");
        mem.symbol = std::string(term.text);
    }

    Operand parse_operand(Piece p) const {
        p = trim(p);
        if (p.text.empty()) fail(p.col, "empty operand");
        // Optional size qualifier: byte/word/dword/qword [ptr]
        static constexpr std::string_view kSizes[] = {"byte", "word", "dword", "qword"};
        for (auto sz : kSizes) {
            const std::string head = lower(p.text.substr(0, sz.size()));
            if (head == sz && p.text.size() > sz.size() &&
                (std::isspace(static_cast<unsigned char>(p.text[sz.size()])) || p.text[sz.size()] == '[')) {
                Piece rest = trim({p.text.substr(sz.size()), p.col + sz.size()});
                if (lower(rest.text.substr(0, 3)) == "ptr" && rest.text.size() > 3 &&
                    (std::isspace(static_cast<unsigned char>(rest.text[3])) || rest.text[3] == '[')) {
                    rest = trim({rest.text.substr(3), rest.col + 3});
                }
                if (rest.text.empty() || rest.text.front() != '[') fail(rest.col, "expected memory operand after size");
                p = rest;
                break;
            }
        }
        if (p.text.front() == '[') {
            if (p.text.back() != ']') fail(p.col, "unterminated memory operand");
            return parse_memory({p.text.substr(1, p.text.size() - 2), p.col + 1});
        }
        if (starts_number(p.text)) return Imm{parse_number(p)};
        if (auto r = try_canonicalize_register(p.text)) return *r;
        if (looks_like_register(p.text)) fail(p.col, "unknown register '" + std::string(p.text) + "'");
        if (!is_identifier(p.text)) fail(p.col, "malformed operand '" + std::string(p.text) + "'");
        return Label{std::string(p.text)};
    }

private:
    std::size_t line_;
};

std::string unescape(Piece p, const LineParser& lp) {
    std::string_view s = p.text;
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') lp.fail(p.col, "expected quoted string");
    s = s.substr(1, s.size() - 2);
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (++i >= s.size()) lp.fail(p.col + i, "dangling escape");
        switch (s[i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '0': out.push_back('\0'); break;
        case '\\': out.push_back('\\'); break;
        case '"': out.push_back('"'); break;
        case 'x': {
            if (i + 2 >= s.size()) lp.fail(p.col + i, "short \\x escape");
            unsigned v = 0;
            auto [ptr, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
            if (ec != std::errc{} || ptr != s.data() + i + 3) {
                lp.fail(p.col + i, "bad \\x escape");
            }
            out.push_back(static_cast<char>(v));
            i += 2;
            break;
        }
        default: lp.fail(p.col + i, std::string("unknown escape \\") + s[i]);
        }
    }
    return out;
}

/// Cuts a trailing comment ('#' or ';') that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (!quoted && (c == '#' || c == ';')) return line.substr(0, i);
    }
    return line;
}

struct PendingProc {
    Procedure proc;
    std::size_t line = 0;
    bool open_block = false;      // a block that can still receive instructions
    int auto_label = 0;
};

void validate_minimum_operands(const Instruction& inst, const LineParser& lp, std::size_t col) {
    static const std::set<std::string> kTwo = {"mov", "movzx", "movsx", "movsxd", "lea", "add", "sub",
                                               "xor", "and", "or", "shl", "shr", "sar", "cmp", "test"};
    static const std::set<std::string> kOne = {"inc", "dec", "neg", "not", "push", "pop", "call", "jmp"};
    const auto n = inst.operands.size();
    if (kTwo.count(inst.mnemonic) && n != 2) lp.fail(col, "'" + inst.mnemonic + "' takes two operands");
    if (kOne.count(inst.mnemonic) && n != 1) lp.fail(col, "'" + inst.mnemonic + "' takes one operand");
    if (is_conditional_jump(inst.mnemonic) && (n != 1 || kind_of(inst.operands[0]) != OperandKind::label)) {
        lp.fail(col, "conditional jump needs a label target");
    }
    if ((inst.mnemonic == "ret" || inst.mnemonic == "nop") && n > 1) {
        lp.fail(col, "'" + inst.mnemonic + "' takes no operands");
    }
    if (inst.mnemonic == "imul" && (n < 1 || n > 3)) lp.fail(col, "'imul' takes one to three operands");
    if (inst.mnemonic == "lea" && kind_of(inst.operands[1]) != OperandKind::mem &&
        kind_of(inst.operands[1]) != OperandKind::label) {
        lp.fail(col, "'lea' needs an address operand");
    }
    if (n >= 1 && kind_of(inst.operands[0]) == OperandKind::imm &&
        (kTwo.count(inst.mnemonic) || inst.mnemonic == "imul")) {
        lp.fail(col, "immediate destination operand");
    }
}

} // namespace

Program parse_listing(std::string_view text) {
    Program program;
    std::optional<PendingProc> current;
    std::vector<PendingProc> finished;
    std::set<std::string> proc_names;

    std::size_t line_no = 0;
    std::size_t pos = 0;

    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

        LineParser lp(line_no);
        Piece line = trim({strip_comment(raw), 0});
        if (line.text.empty()) continue;

        // First whitespace-delimited word.
        std::size_t word_end = 0;
        while (word_end < line.text.size() && !std::isspace(static_cast<unsigned char>(line.text[word_end]))) ++word_end;
        const std::string_view head = line.text.substr(0, word_end);
        Piece rest = trim({line.text.substr(word_end), line.col + word_end});

        if (head.front() == '.') {
            if (head == ".import") {
                if (current) lp.fail(line.col, ".import inside a procedure");
                auto parts = split_top(rest, ' ');
                parts.erase(std::remove_if(parts.begin(), parts.end(), [](const Piece& q) { return q.text.empty(); }),
                            parts.end());
                if (parts.size() != 2) lp.fail(rest.col, "expected '.import <name> <arity|?>'");
                const auto& name = parts[0];
                if (name.text.empty() || !std::all_of(name.text.begin(), name.text.end(), [](unsigned char c) {
                        return c > 32 && c < 127;
                    })) {
                    lp.fail(name.col, "import name must be non-empty printable ASCII");
                }
                if (program.find_import(name.text)) lp.fail(name.col, "duplicate import '" + std::string(name.text) + "'");
                Import imp{std::string(name.text), std::nullopt};
                if (parts[1].text != "?") {
                    const auto arity = lp.parse_number(parts[1]);
                    if (arity < 0) lp.fail(parts[1].col, "negative arity");
                    imp.arity = static_cast<int>(arity);
                }
                program.imports.push_back(std::move(imp));
            } else if (head == ".string") {
                if (current) lp.fail(line.col, ".string inside a procedure");
                std::size_t id_end = 0;
                while (id_end < rest.text.size() && !std::isspace(static_cast<unsigned char>(rest.text[id_end]))) ++id_end;
                Piece id{rest.text.substr(0, id_end), rest.col};
                if (!is_identifier(id.text)) lp.fail(id.col, "expected string id");
                if (program.find_string(id.text)) lp.fail(id.col, "duplicate string id '" + std::string(id.text) + "'");
                Piece body = trim({rest.text.substr(id_end), rest.col + id_end});
                program.strings.push_back({std::string(id.text), unescape(body, lp)});
            } else if (head == ".proc") {
                if (current) lp.fail(line.col, "nested .proc (missing .endproc)");
                auto parts = split_top(rest, ' ');
                parts.erase(std::remove_if(parts.begin(), parts.end(), [](const Piece& q) { return q.text.empty(); }),
                            parts.end());
                if (parts.empty() || parts.size() > 2) lp.fail(rest.col, "expected '.proc <name> [args=<n>]'");
                if (!is_identifier(parts[0].text)) lp.fail(parts[0].col, "malformed procedure name");
                if (!proc_names.insert(std::string(parts[0].text)).second) {
                    lp.fail(parts[0].col, "duplicate procedure '" + std::string(parts[0].text) + "'");
                }
                PendingProc pp;
                pp.proc.name = std::string(parts[0].text);
                pp.line = line_no;
                if (parts.size() == 2) {
                    if (parts[1].text.substr(0, 5) != "args=") lp.fail(parts[1].col, "expected args=<n>");
                    const auto n = lp.parse_number({parts[1].text.substr(5), parts[1].col + 5});
                    if (n < 0 || n > 6) lp.fail(parts[1].col, "args must be between 0 and 6");
                    pp.proc.declared_args = static_cast<int>(n);
                }
                current = std::move(pp);
            } else if (head == ".endproc") {
                if (!current) lp.fail(line.col, ".endproc without .proc");
                if (!rest.text.empty()) lp.fail(rest.col, "unexpected text after .endproc");
                finished.push_back(std::move(*current));
                current.reset();
            } else if (head == ".bb") {
                if (!current) lp.fail(line.col, ".bb outside a procedure");
                if (!is_identifier(rest.text)) lp.fail(rest.col, "expected block label");
                if (current->proc.find_block(rest.text)) {
                    lp.fail(rest.col, "duplicate block label '" + std::string(rest.text) + "'");
                }
                current->proc.blocks.push_back({std::string(rest.text), {}});
                current->open_block = true;
            } else {
                lp.fail(line.col, "unknown directive '" + std::string(head) + "'");
            }
            continue;
        }

        // Instruction line.
        if (!current) lp.fail(line.col, "instruction outside a procedure");
        Instruction inst;
        inst.mnemonic = lower(head);
        if (!std::all_of(inst.mnemonic.begin(), inst.mnemonic.end(), [](unsigned char c) { return std::isalnum(c); })) {
            lp.fail(line.col, "malformed mnemonic '" + std::string(head) + "'");
        }
        if (!rest.text.empty()) {
            for (const auto& piece : split_top(rest, ',')) inst.operands.push_back(lp.parse_operand(piece));
        }
        inst.is_call = inst.mnemonic == "call";
        inst.is_terminator = is_terminator_mnemonic(inst.mnemonic);
        inst.line = static_cast<std::uint32_t>(line_no);
        validate_minimum_operands(inst, lp, line.col);

        auto& proc = current->proc;
        if (!current->open_block) {
            std::string label;
            do {
                label = ".L" + std::to_string(current->auto_label++);
            } while (proc.find_block(label));
            proc.blocks.push_back({label, {}});
        }
        current->open_block = !inst.is_terminator;
        proc.blocks.back().instructions.push_back(std::move(inst));
    }
    if (current) throw ParseError(current->line, 0, "procedure '" + current->proc.name + "' lacks .endproc");

    // Resolve symbols now that every import, string and procedure is known.
    for (auto& pp : finished) {
        auto& proc = pp.proc;
        std::uint32_t seq = 0;
        for (auto& block : proc.blocks) {
            for (auto& inst : block.instructions) {
                inst.seq = seq++;
                LineParser lp(inst.line);
                const bool is_jump = inst.mnemonic == "jmp" || is_conditional_jump(inst.mnemonic);
                for (auto& op : inst.operands) {
                    auto* label = std::get_if<Label>(&op);
                    if (!label) continue;
                    if (is_jump) {
                        if (!proc.find_block(label->name)) {
                            lp.fail(0, "jump to undefined label '" + label->name + "'");
                        }
                    } else if (inst.is_call) {
                        if (!program.find_import(label->name) && !proc_names.count(label->name)) {
                            lp.fail(0, "call to undefined target '" + label->name + "'");
                        }
                    } else if (program.find_string(label->name)) {
                        op = StringRef{label->name};
                    }
                }
            }
        }
        program.procedures.push_back(std::move(proc));
    }
    return program;
}

} // namespace acs
