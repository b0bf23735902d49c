#include "awi/context.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace awi {

std::string_view to_string(ContextScope s) {
    switch (s) {
        case ContextScope::MethodBody: return "method_body";
        case ContextScope::LineWindow: return "line_window";
        case ContextScope::Unavailable: return "unavailable";
    }
    return "unavailable";
}

ContextScope context_scope_from_string(std::string_view s) {
    if (s == "method_body") return ContextScope::MethodBody;
    if (s == "line_window") return ContextScope::LineWindow;
    if (s == "unavailable") return ContextScope::Unavailable;
    throw Error("unknown context scope '" + std::string(s) + "'");
}

namespace {

int line_count(const std::string& text) {
    if (text.empty()) return 0;
    int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    return text.back() == '\n' ? n : n + 1;
}

}  // namespace

RawContext extract_context(const Warning& w, const SourceTree* source, const ContextOptions& options) {
    RawContext ctx;
    ctx.warning_key = warning_key(w);
    ctx.method_signature = w.location.method_signature;
    if (!source) {
        ctx.flags.emplace_back("no source snapshot");
        return ctx;
    }
    if (!w.location.has_line_info()) {
        ctx.flags.emplace_back("no line info");
        return ctx;
    }
    const std::string* file = source->file(w.location.file_path);
    if (!file) {
        ctx.flags.emplace_back("source file missing");
        return ctx;
    }
    const int total = line_count(*file);
    if (w.location.end_line > total) {
        ctx.flags.emplace_back("warning lines outside file");
        return ctx;
    }

    if (options.method_granularity) {
        auto lexed = lex_java(*file);
        auto scan = find_methods(lexed.tokens);
        if (!lexed.clean() || !scan.balanced) ctx.flags.emplace_back("unparseable file");
        if (scan.balanced) {
            if (auto m = enclosing_method(scan, w.location.start_line, w.location.end_line)) {
                if (auto text = source->lines(w.location.file_path, m->first_line, m->last_line)) {
                    ctx.source_text = std::move(*text);
                    ctx.scope = ContextScope::MethodBody;
                    if (!ctx.method_signature) ctx.method_signature = m->name;
                    return ctx;
                }
            }
        }
    }

    int first = std::max(1, w.location.start_line - options.window);
    int last = std::min(total, w.location.end_line + options.window);
    if (auto text = source->lines(w.location.file_path, first, last)) {
        ctx.source_text = std::move(*text);
        ctx.scope = ContextScope::LineWindow;
    } else {
        ctx.flags.emplace_back("warning lines outside file");
    }
    return ctx;
}

std::vector<std::string> TokenSequence::texts() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.text);
    return out;
}

std::string TokenSequence::joined() const {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t.text;
    }
    return out;
}

std::string TokenSequence::rendered() const {
    auto glue_left = [](const Token& t, const Token& prev) {
        if (t.text == ";" || t.text == "," || t.text == ")" || t.text == "]" || t.text == ".") return true;
        return (t.text == "(" || t.text == "[") &&
               (prev.cls == TokenClass::Identifier || prev.text == ")" || prev.text == "]");
    };
    auto glue_right = [](const Token& t) { return t.text == "(" || t.text == "[" || t.text == "."; };
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0 && !glue_left(tokens[i], tokens[i - 1]) && !glue_right(tokens[i - 1])) out.push_back(' ');
        out += tokens[i].text;
    }
    return out;
}

TokenSequence tokenize(std::string_view source_text, std::size_t cap) {
    auto lexed = lex_java(source_text);
    TokenSequence seq;
    seq.lexical_errors = !lexed.clean();
    seq.tokens = std::move(lexed.tokens);
    if (cap > 0 && seq.tokens.size() > cap) {
        seq.tokens.resize(cap);
        seq.truncated = true;
    }
    return seq;
}

namespace {

bool is_tok(const Token& t, std::string_view s) {
    return (t.cls == TokenClass::Separator || t.cls == TokenClass::Operator) && t.text == s;
}

const std::unordered_set<std::string_view>& named_types() {
    static const std::unordered_set<std::string_view> s = {
        "String", "Object", "Integer", "Long", "Double", "Float", "Boolean", "Character", "Byte", "Short"};
    return s;
}

std::string type_kind(std::string_view base, int dims, bool generic) {
    std::string kind = (!generic && (is_java_primitive(base) || named_types().count(base))) ? std::string(base)
                                                                                           : std::string("ref");
    for (int d = 0; d < dims; ++d) kind += "Array";
    return kind;
}

// Declared type of each variable lexeme, from `Type name` followed by = ; , ) : or [.
std::unordered_map<std::string, std::string> declared_types(const std::vector<Token>& toks) {
    std::unordered_map<std::string, std::string> out;
    for (std::size_t i = 1; i + 1 < toks.size(); ++i) {
        if (toks[i].cls != TokenClass::Identifier) continue;
        const Token& next = toks[i + 1];
        if (!(is_tok(next, "=") || is_tok(next, ";") || is_tok(next, ",") || is_tok(next, ")") ||
              is_tok(next, ":") || is_tok(next, "[")))
            continue;
        std::size_t j = i - 1;
        int dims = 0;
        while (j >= 2 && is_tok(toks[j], "]") && is_tok(toks[j - 1], "[")) {
            ++dims;
            j -= 2;
        }
        const Token& t = toks[j];
        std::string kind;
        if (t.cls == TokenClass::Keyword && is_java_primitive(t.text)) {
            kind = type_kind(t.text, dims, false);
        } else if (t.cls == TokenClass::Identifier) {
            kind = type_kind(t.text, dims, false);
        } else if (is_tok(t, ">") || is_tok(t, ">>") || is_tok(t, ">>>")) {
            int depth = 0;
            std::size_t k = j + 1;
            bool found = false;
            while (k-- > 0) {
                if (is_tok(toks[k], ">")) depth += 1;
                else if (is_tok(toks[k], ">>")) depth += 2;
                else if (is_tok(toks[k], ">>>")) depth += 3;
                else if (is_tok(toks[k], "<") && --depth == 0) {
                    found = k > 0 && toks[k - 1].cls == TokenClass::Identifier;
                    break;
                } else if (is_tok(toks[k], ";") || is_tok(toks[k], "{") || is_tok(toks[k], "}")) {
                    break;
                }
            }
            if (!found) continue;
            kind = type_kind("", dims, true);
        } else {
            continue;
        }
        out.emplace(toks[i].text, std::move(kind));
    }
    return out;
}

std::string literal_kind(LiteralKind k, bool typed) {
    switch (k) {
        case LiteralKind::Int: return "int";
        case LiteralKind::Long: return typed ? "long" : "int";
        case LiteralKind::Float: return "float";
        case LiteralKind::Double: return typed ? "double" : "float";
        case LiteralKind::Char: return "char";
        case LiteralKind::String: return typed ? "String" : "str";
        case LiteralKind::Bool: return typed ? "boolean" : "bool";
        case LiteralKind::Null: return "null";
        case LiteralKind::None: break;
    }
    return "lit";
}

}  // namespace

AbstractedContext abstract_tokens(std::vector<Token> tokens, const AbstractionOptions& options) {
    AbstractedContext out;
    out.typed = options.use_declared_types;
    auto types = out.typed ? declared_types(tokens) : std::unordered_map<std::string, std::string>{};

    std::unordered_map<std::string, std::string> assigned;  // role-tagged lexeme -> abstract
    std::unordered_map<std::string, int> counters;
    for (auto& t : tokens) {
        std::string role_key;
        std::string stem;
        if (t.cls == TokenClass::Identifier) {
            role_key = "I" + t.text;
            auto it = types.find(t.text);
            stem = (it == types.end() ? std::string("id") : it->second) + "Var";
        } else if (t.cls == TokenClass::Literal) {
            role_key = "L" + t.text;
            stem = literal_kind(t.literal, out.typed) + "Literal";
        } else {
            continue;
        }
        auto [it, inserted] = assigned.try_emplace(role_key);
        if (inserted) {
            it->second = stem + std::to_string(++counters[stem]);
            out.mapping.emplace(it->second, t.text);
        }
        t.text = it->second;
    }
    out.tokens.tokens = std::move(tokens);
    if (options.cap > 0 && out.tokens.tokens.size() > options.cap) {
        out.tokens.tokens.resize(options.cap);
        out.tokens.truncated = true;
    }
    return out;
}

AbstractedContext abstract_context(const RawContext& raw, const AbstractionOptions& options) {
    if (raw.scope == ContextScope::Unavailable) throw Error("cannot abstract an unavailable context");
    auto lexed = lex_java(raw.source_text);
    AbstractionOptions effective = options;
    // Declared types need a clean lex; otherwise fall back to lexical kinds.
    effective.use_declared_types = options.use_declared_types && lexed.clean();
    auto out = abstract_tokens(std::move(lexed.tokens), effective);
    out.tokens.lexical_errors = !lexed.clean();
    return out;
}

std::vector<std::string> deabstract(const AbstractedContext& ctx) {
    std::vector<std::string> out;
    out.reserve(ctx.tokens.tokens.size());
    for (const auto& t : ctx.tokens.tokens) {
        if (t.cls == TokenClass::Identifier || t.cls == TokenClass::Literal) {
            auto it = ctx.mapping.find(t.text);
            out.push_back(it == ctx.mapping.end() ? t.text : it->second);
        } else {
            out.push_back(t.text);
        }
    }
    return out;
}

}  // namespace awi
