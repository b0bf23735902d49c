#pragma once

// Warning context extraction, tokenization and identifier/literal abstraction.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "awi/core.hpp"
#include "awi/java_lexer.hpp"
#include "awi/source_tree.hpp"

namespace awi {

inline constexpr std::size_t kDefaultSequenceCap = 256;

enum class ContextScope { MethodBody, LineWindow, Unavailable };

std::string_view to_string(ContextScope s);
ContextScope context_scope_from_string(std::string_view s);

struct RawContext {
    std::string warning_key;
    std::string source_text;
    ContextScope scope = ContextScope::Unavailable;
    std::optional<std::string> method_signature;
    std::vector<std::string> flags;
};

struct ContextOptions {
    bool method_granularity = true;  // false: always the line window
    int window = 0;                  // extra lines on each side of the warning lines
};

/// Enclosing method body when the file parses and a method contains the warning lines,
/// otherwise the line window. Unavailable without a source tree, the file or line info.
RawContext extract_context(const Warning& w, const SourceTree* source, const ContextOptions& options = {});

struct TokenSequence {
    std::vector<Token> tokens;
    bool truncated = false;
    bool lexical_errors = false;

    std::vector<std::string> texts() const;
    /// Space-joined token texts.
    std::string joined() const;
    /// Java-style spacing: no space before ; , ) ] . or a call/index bracket, none after ( [ .
    std::string rendered() const;
};

/// Lexes and keeps the first `cap` tokens (0 = no cap).
TokenSequence tokenize(std::string_view source_text, std::size_t cap = kDefaultSequenceCap);

struct AbstractedContext {
    TokenSequence tokens;
    std::map<std::string, std::string> mapping;  // abstract token -> original lexeme
    bool typed = true;  // false: kinds are lexical subkinds only
};

struct AbstractionOptions {
    bool use_declared_types = true;
    std::size_t cap = kDefaultSequenceCap;
};

/// Replaces identifiers with <kind>Var<n> and literals with <kind>Literal<n>. The same lexeme
/// always maps to the same abstract token within one context; n counts per kind in order of
/// first occurrence. Throws Error for an Unavailable context.
AbstractedContext abstract_context(const RawContext& raw, const AbstractionOptions& options = {});
AbstractedContext abstract_tokens(std::vector<Token> tokens, const AbstractionOptions& options = {});

/// Maps abstract tokens back through the mapping.
std::vector<std::string> deabstract(const AbstractedContext& ctx);

}  // namespace awi
