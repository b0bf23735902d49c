#include "awi/java_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace awi {

std::string_view to_string(TokenClass c) {
    switch (c) {
        case TokenClass::Identifier: return "identifier";
        case TokenClass::Literal: return "literal";
        case TokenClass::Keyword: return "keyword";
        case TokenClass::Operator: return "operator";
        case TokenClass::Separator: return "separator";
        case TokenClass::Other: return "other";
    }
    return "other";
}

namespace {

const std::unordered_set<std::string_view>& keywords() {
    static const std::unordered_set<std::string_view> k = {
        "abstract", "assert",     "boolean",  "break",     "byte",      "case",       "catch",
        "char",     "class",      "const",    "continue",  "default",   "do",         "double",
        "else",     "enum",       "extends",  "final",     "finally",   "float",      "for",
        "goto",     "if",         "implements", "import",  "instanceof", "int",       "interface",
        "long",     "native",     "new",      "package",   "private",   "protected",  "public",
        "return",   "short",      "static",   "strictfp",  "super",     "switch",     "synchronized",
        "this",     "throw",      "throws",   "transient", "try",       "void",       "volatile",
        "while",    "var"};
    return k;
}

// Longest first.
constexpr std::array<std::string_view, 38> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "->", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=",   "-=",  "*=",  "/=",  "&=", "|=", "^=", "%=", "<<", ">>", "=",  ">",  "<",
    "!",    "~",   "?",   ":",   "+",  "-",  "*",  "/",  "&",  "|",  "^",  "%"};

constexpr std::array<std::string_view, 11> kSeparators = {"...", "::", "(", ")", "{", "}",
                                                          "[", "]", ";", ",", "."};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_part(unsigned char c) { return ident_start(c) || std::isdigit(c); }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    LexResult run() {
        while (pos_ < src_.size()) {
            unsigned char c = peek();
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else if (starts_with("//")) {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (starts_with("/*")) {
                block_comment();
            } else if (ident_start(c)) {
                identifier();
            } else if (std::isdigit(c) || (c == '.' && std::isdigit(peek(1)))) {
                number();
            } else if (starts_with("\"\"\"")) {
                text_block();
            } else if (c == '"') {
                quoted('"', LiteralKind::String);
            } else if (c == '\'') {
                quoted('\'', LiteralKind::Char);
            } else if (c == '@') {
                emit(pos_, 1, TokenClass::Separator);
            } else if (!punctuation()) {
                result_.problems.push_back("unexpected character at line " + std::to_string(line_));
                emit(pos_, 1, TokenClass::Other);
            }
        }
        return std::move(result_);
    }

private:
    unsigned char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? static_cast<unsigned char>(src_[pos_ + ahead]) : '\0';
    }
    bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

    void emit(std::size_t begin, std::size_t len, TokenClass cls, LiteralKind lit = LiteralKind::None,
              int line = 0) {
        result_.tokens.push_back({std::string(src_.substr(begin, len)), cls, lit, line ? line : line_});
        pos_ = begin + len;
    }

    void block_comment() {
        auto end = src_.find("*/", pos_ + 2);
        std::size_t stop = end == std::string_view::npos ? src_.size() : end + 2;
        if (end == std::string_view::npos)
            result_.problems.push_back("unterminated comment at line " + std::to_string(line_));
        line_ += static_cast<int>(std::count(src_.begin() + pos_, src_.begin() + stop, '\n'));
        pos_ = stop;
    }

    void identifier() {
        std::size_t begin = pos_;
        while (pos_ < src_.size() && ident_part(peek())) ++pos_;
        std::string_view word = src_.substr(begin, pos_ - begin);
        if (word == "true" || word == "false")
            emit(begin, word.size(), TokenClass::Literal, LiteralKind::Bool);
        else if (word == "null")
            emit(begin, word.size(), TokenClass::Literal, LiteralKind::Null);
        else if (keywords().count(word))
            emit(begin, word.size(), TokenClass::Keyword);
        else
            emit(begin, word.size(), TokenClass::Identifier);
    }

    void number() {
        std::size_t begin = pos_;
        bool is_float = false;
        bool hex = false;
        if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
            hex = true;
            pos_ += 2;
            while (std::isxdigit(peek()) || peek() == '_' || peek() == '.') {
                if (peek() == '.') is_float = true;
                ++pos_;
            }
            if (peek() == 'p' || peek() == 'P') {
                is_float = true;
                ++pos_;
                if (peek() == '+' || peek() == '-') ++pos_;
                while (std::isdigit(peek())) ++pos_;
            }
        } else if (peek() == '0' && (peek(1) == 'b' || peek(1) == 'B')) {
            pos_ += 2;
            while (peek() == '0' || peek() == '1' || peek() == '_') ++pos_;
        } else {
            while (std::isdigit(peek()) || peek() == '_') ++pos_;
            if (peek() == '.' && std::isdigit(peek(1))) {
                is_float = true;
                ++pos_;
                while (std::isdigit(peek()) || peek() == '_') ++pos_;
            } else if (peek() == '.' && !ident_start(peek(1)) && peek(1) != '.') {
                is_float = true;  // "1." form
                ++pos_;
            }
            if (peek() == 'e' || peek() == 'E') {
                is_float = true;
                ++pos_;
                if (peek() == '+' || peek() == '-') ++pos_;
                while (std::isdigit(peek())) ++pos_;
            }
        }
        LiteralKind kind = is_float ? LiteralKind::Double : LiteralKind::Int;
        unsigned char s = peek();
        if (s == 'l' || s == 'L') {
            kind = LiteralKind::Long;
            ++pos_;
        } else if (!hex && (s == 'f' || s == 'F')) {
            kind = LiteralKind::Float;
            ++pos_;
        } else if (!hex && (s == 'd' || s == 'D')) {
            kind = LiteralKind::Double;
            ++pos_;
        }
        if (ident_part(peek())) {
            result_.problems.push_back("malformed number at line " + std::to_string(line_));
            while (ident_part(peek())) ++pos_;
        }
        emit(begin, pos_ - begin, TokenClass::Literal, kind);
    }

    void quoted(char quote, LiteralKind kind) {
        std::size_t begin = pos_++;
        while (pos_ < src_.size() && src_[pos_] != quote && src_[pos_] != '\n') {
            if (src_[pos_] == '\\') ++pos_;
            ++pos_;
        }
        if (pos_ >= src_.size() || src_[pos_] != quote) {
            result_.problems.push_back("unterminated literal at line " + std::to_string(line_));
            emit(begin, pos_ - begin, TokenClass::Other);
            return;
        }
        emit(begin, pos_ + 1 - begin, TokenClass::Literal, kind);
    }

    void text_block() {
        std::size_t begin = pos_;
        int start_line = line_;
        auto end = src_.find("\"\"\"", pos_ + 3);
        while (end != std::string_view::npos && src_[end - 1] == '\\') end = src_.find("\"\"\"", end + 1);
        std::size_t stop = end == std::string_view::npos ? src_.size() : end + 3;
        line_ += static_cast<int>(std::count(src_.begin() + begin, src_.begin() + stop, '\n'));
        if (end == std::string_view::npos) {
            result_.problems.push_back("unterminated text block at line " + std::to_string(start_line));
            emit(begin, stop - begin, TokenClass::Other, LiteralKind::None, start_line);
            return;
        }
        emit(begin, stop - begin, TokenClass::Literal, LiteralKind::String, start_line);
    }

    bool punctuation() {
        for (auto s : kSeparators)
            if (starts_with(s)) {
                emit(pos_, s.size(), TokenClass::Separator);
                return true;
            }
        for (auto o : kOperators)
            if (starts_with(o)) {
                emit(pos_, o.size(), TokenClass::Operator);
                return true;
            }
        return false;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    LexResult result_;
};

}  // namespace

LexResult lex_java(std::string_view source) { return Lexer(source).run(); }

bool is_java_primitive(std::string_view word) {
    static const std::unordered_set<std::string_view> p = {"boolean", "byte", "char",  "short",
                                                           "int",     "long", "float", "double"};
    return p.count(word) > 0;
}

namespace {

enum class Scope { TypeBody, MethodBody, Block };

bool is_sep(const Token& t, std::string_view s) {
    return (t.cls == TokenClass::Separator || t.cls == TokenClass::Operator) && t.text == s;
}

bool is_type_keyword(const Token& t) {
    return t.cls == TokenClass::Keyword && (t.text == "class" || t.text == "interface" || t.text == "enum");
}

// Index of the '(' matching the ')' at `close`, searching no earlier than `lo`.
std::optional<std::size_t> matching_open(const std::vector<Token>& toks, std::size_t lo, std::size_t close) {
    int depth = 0;
    for (std::size_t i = close + 1; i-- > lo;) {
        if (is_sep(toks[i], ")")) ++depth;
        if (is_sep(toks[i], "(") && --depth == 0) return i;
    }
    return std::nullopt;
}

Scope classify_block(const std::vector<Token>& toks, std::size_t header_begin, std::size_t brace,
                     bool in_type_body, std::string& method_name) {
    for (std::size_t i = header_begin; i < brace; ++i) {
        if (is_type_keyword(toks[i]) && !(i > header_begin && is_sep(toks[i - 1], ".")))
            return Scope::TypeBody;
        // "record Name(" declares a type when followed by an identifier.
        if (toks[i].cls == TokenClass::Identifier && toks[i].text == "record" && i + 1 < brace &&
            toks[i + 1].cls == TokenClass::Identifier)
            return Scope::TypeBody;
    }
    if (brace == header_begin) return Scope::Block;
    // Last top-level ')' of the header; what follows may only be a throws clause.
    std::optional<std::size_t> close;
    for (std::size_t i = brace; i-- > header_begin;) {
        if (is_sep(toks[i], ")")) {
            close = i;
            break;
        }
        if (toks[i].cls == TokenClass::Keyword && toks[i].text == "throws") continue;
        if (toks[i].cls == TokenClass::Identifier || is_sep(toks[i], ".") || is_sep(toks[i], ",") ||
            is_sep(toks[i], "<") || is_sep(toks[i], ">"))
            continue;
        return Scope::Block;
    }
    if (!close) return Scope::Block;
    if (*close + 1 < brace && !(toks[*close + 1].cls == TokenClass::Keyword && toks[*close + 1].text == "throws"))
        return Scope::Block;
    auto open = matching_open(toks, header_begin, *close);
    if (!open || *open == header_begin) return Scope::Block;
    // Anonymous class: new Name<...>(...) {
    for (std::size_t i = *open; i-- > header_begin;) {
        const auto& t = toks[i];
        if (t.cls == TokenClass::Keyword && t.text == "new") return Scope::TypeBody;
        if (t.cls == TokenClass::Identifier || is_sep(t, ".") || is_sep(t, "<") || is_sep(t, ">") ||
            is_sep(t, ",") || is_sep(t, ">>") || is_sep(t, "?"))
            continue;
        break;
    }
    const Token& name = toks[*open - 1];
    if (in_type_body && name.cls == TokenClass::Identifier) {
        method_name = name.text;
        return Scope::MethodBody;
    }
    return Scope::Block;
}

}  // namespace

MethodScan find_methods(const std::vector<Token>& tokens) {
    MethodScan scan;
    struct Frame {
        Scope scope;
        std::size_t method_index;  // into scan.methods when scope == MethodBody
    };
    // The compilation unit behaves like a type body.
    std::vector<Frame> stack{{Scope::TypeBody, 0}};
    std::size_t header_begin = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (is_sep(t, ";")) {
            header_begin = i + 1;
        } else if (is_sep(t, "{")) {
            std::string name;
            Scope s = classify_block(tokens, header_begin, i, stack.back().scope == Scope::TypeBody, name);
            Frame f{s, 0};
            if (s == Scope::MethodBody) {
                int first_line = header_begin < i ? tokens[header_begin].line : t.line;
                scan.methods.push_back({name, first_line, 0});
                f.method_index = scan.methods.size() - 1;
            }
            stack.push_back(f);
            header_begin = i + 1;
        } else if (is_sep(t, "}")) {
            if (stack.size() == 1) {
                scan.balanced = false;
            } else {
                if (stack.back().scope == Scope::MethodBody) scan.methods[stack.back().method_index].last_line = t.line;
                stack.pop_back();
            }
            header_begin = i + 1;
        }
    }
    if (stack.size() != 1) scan.balanced = false;
    // Unclosed methods are dropped.
    std::erase_if(scan.methods, [](const MethodSpan& m) { return m.last_line == 0; });
    std::stable_sort(scan.methods.begin(), scan.methods.end(),
                     [](const MethodSpan& a, const MethodSpan& b) { return a.last_line < b.last_line; });
    return scan;
}

std::optional<MethodSpan> enclosing_method(const MethodScan& scan, int start_line, int end_line) {
    std::optional<MethodSpan> best;
    for (const auto& m : scan.methods) {
        if (m.first_line > start_line || m.last_line < end_line) continue;
        if (!best || m.last_line - m.first_line < best->last_line - best->first_line) best = m;
    }
    return best;
}

}  // namespace awi
