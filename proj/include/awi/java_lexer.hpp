#pragma once

// Java lexical analysis and a brace-level structural scan that locates method bodies.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace awi {

enum class TokenClass { Identifier, Literal, Keyword, Operator, Separator, Other };

enum class LiteralKind { None, Int, Long, Float, Double, Char, String, Bool, Null };

std::string_view to_string(TokenClass c);

struct Token {
    std::string text;
    TokenClass cls = TokenClass::Other;
    LiteralKind literal = LiteralKind::None;
    int line = 1;

    friend bool operator==(const Token&, const Token&) = default;
};

struct LexResult {
    std::vector<Token> tokens;
    std::vector<std::string> problems;  // empty when the text was lexically valid

    bool clean() const { return problems.empty(); }
};

/// Comments and whitespace are dropped. Invalid characters become TokenClass::Other.
LexResult lex_java(std::string_view source);

bool is_java_primitive(std::string_view word);

struct MethodSpan {
    std::string name;
    int first_line = 0;  // first token of the declaration (annotations/modifiers included)
    int last_line = 0;   // closing brace
};

struct MethodScan {
    std::vector<MethodSpan> methods;  // in order of closing brace
    bool balanced = true;
};

MethodScan find_methods(const std::vector<Token>& tokens);

/// Innermost method whose span contains [start_line, end_line].
std::optional<MethodSpan> enclosing_method(const MethodScan& scan, int start_line, int end_line);

}  // namespace awi
