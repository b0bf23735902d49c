#include <doctest.h>

#include <random>
#include <set>

#include "awi/context.hpp"
#include "synth.hpp"

using namespace awi;

namespace {

RawContext method_context(std::string text) {
    RawContext r;
    r.source_text = std::move(text);
    r.scope = ContextScope::MethodBody;
    return r;
}

std::string joined(const AbstractedContext& a) { return a.tokens.joined(); }

Warning warning_at(int start, int end, const std::string& file = "org/x/Foo.java") {
    Warning w;
    w.type = "T";
    w.category = "C";
    w.location = {file, "org.x.Foo", std::nullopt, start, end};
    return w;
}

}  // namespace

TEST_CASE("lexer: the basic declaration") {
    auto lexed = lex_java("int a = 1;");
    CHECK(lexed.clean());
    REQUIRE(lexed.tokens.size() == 5);
    CHECK(lexed.tokens[0].cls == TokenClass::Keyword);
    CHECK(lexed.tokens[1].cls == TokenClass::Identifier);
    CHECK(lexed.tokens[2].cls == TokenClass::Operator);
    CHECK(lexed.tokens[3].cls == TokenClass::Literal);
    CHECK(lexed.tokens[3].literal == LiteralKind::Int);
    CHECK(lexed.tokens[4].cls == TokenClass::Separator);
}

TEST_CASE("lexer: literals, comments and operators") {
    auto lexed = lex_java(
        "// line comment\n"
        "long x = 0xFFL; /* block\n comment */ double d = 1.5e3; float f = 2f;\n"
        "char c = '\\n'; String s = \"a\\\"b\"; boolean t = true; Object o = null;\n"
        "x >>>= 2; y = a -> a::b; String block = \"\"\"\n  text\n  \"\"\";");
    CHECK(lexed.clean());
    std::vector<std::pair<std::string, LiteralKind>> literals;
    std::set<std::string> operators;
    for (const auto& t : lexed.tokens) {
        if (t.cls == TokenClass::Literal) literals.emplace_back(t.text, t.literal);
        if (t.cls == TokenClass::Operator) operators.insert(t.text);
    }
    REQUIRE(literals.size() == 9);
    CHECK(literals[0] == std::make_pair(std::string("0xFFL"), LiteralKind::Long));
    CHECK(literals[1].second == LiteralKind::Double);
    CHECK(literals[2].second == LiteralKind::Float);
    CHECK(literals[3].second == LiteralKind::Char);
    CHECK(literals[4] == std::make_pair(std::string("\"a\\\"b\""), LiteralKind::String));
    CHECK(literals[5].second == LiteralKind::Bool);
    CHECK(literals[6].second == LiteralKind::Null);
    CHECK(literals[7].second == LiteralKind::Int);
    CHECK(literals[8].second == LiteralKind::String);
    CHECK(operators.count(">>>="));
    CHECK(operators.count("->"));
    CHECK(lexed.tokens.back().line == 7);
}

TEST_CASE("lexer: invalid text is flagged, not fatal") {
    auto lexed = lex_java("int a = #;\n\"unterminated");
    CHECK(!lexed.clean());
    bool other = false;
    for (const auto& t : lexed.tokens) other = other || t.cls == TokenClass::Other;
    CHECK(other);
    CHECK(lex_java("").tokens.empty());
}

TEST_CASE("method scan: nested types, lambdas and anonymous classes") {
    std::string src =
        "package a;\n"                                  // 1
        "@SuppressWarnings(\"x\")\n"                    // 2
        "public class A<T> extends B implements C {\n"  // 3
        "    private int f = 1;\n"                      // 4
        "    @Override\n"                               // 5
        "    public int foo(int x) throws E {\n"        // 6
        "        Runnable r = () -> { bar(); };\n"      // 7
        "        Object o = new Object() {\n"           // 8
        "            public String toString() {\n"      // 9
        "                return \"o\";\n"               // 10
        "            }\n"                               // 11
        "        };\n"                                  // 12
        "        if (x > 0) { return A.class.hashCode(); }\n"  // 13
        "        return x;\n"                           // 14
        "    }\n"                                       // 15
        "    static class Inner {\n"                    // 16
        "        void baz() { }\n"                      // 17
        "    }\n"                                       // 18
        "    A() { this.f = 2; }\n"                     // 19
        "}\n";
    auto scan = find_methods(lex_java(src).tokens);
    CHECK(scan.balanced);
    std::map<std::string, std::pair<int, int>> spans;
    for (const auto& m : scan.methods) spans[m.name] = {m.first_line, m.last_line};
    CHECK(spans.at("foo") == std::make_pair(5, 15));
    CHECK(spans.at("toString") == std::make_pair(9, 11));
    CHECK(spans.at("baz") == std::make_pair(17, 17));
    CHECK(spans.at("A") == std::make_pair(19, 19));
    CHECK(enclosing_method(scan, 10, 10)->name == "toString");
    CHECK(enclosing_method(scan, 13, 13)->name == "foo");
    CHECK(!enclosing_method(scan, 4, 4));
    CHECK(!find_methods(lex_java("class A { void f() {").tokens).balanced);
}

TEST_CASE("extract_context: method body, class-level line and unavailable") {
    std::string file;
    for (int i = 1; i < 40; ++i) file += (i == 1 ? "class Foo {" : i == 20 ? "    private int field = 3;" : "") + std::string("\n");
    file += "    void foo() {\n";
    for (int i = 41; i < 55; ++i) file += "        step" + std::to_string(i) + "();\n";
    file += "    }\n}\n";
    auto src = SourceTree::from_files({{"org/x/Foo.java", file}});

    auto in_method = extract_context(warning_at(42, 42), &src);
    CHECK(in_method.scope == ContextScope::MethodBody);
    CHECK(in_method.source_text == *src.lines("org/x/Foo.java", 40, 55));
    CHECK(in_method.source_text.rfind("    void foo() {", 0) == 0);

    auto field = extract_context(warning_at(20, 20), &src);
    CHECK(field.scope == ContextScope::LineWindow);
    CHECK(field.source_text == "    private int field = 3;");

    auto line_only = extract_context(warning_at(42, 42), &src, {false, 1});
    CHECK(line_only.scope == ContextScope::LineWindow);
    CHECK(line_only.source_text == *src.lines("org/x/Foo.java", 41, 43));

    CHECK(extract_context(warning_at(42, 42), nullptr).scope == ContextScope::Unavailable);
    CHECK(extract_context(warning_at(0, 0), &src).scope == ContextScope::Unavailable);
    CHECK(extract_context(warning_at(42, 42, "Missing.java"), &src).scope == ContextScope::Unavailable);
    CHECK(extract_context(warning_at(400, 400), &src).scope == ContextScope::Unavailable);
}

TEST_CASE("extract_context: unbalanced file falls back to the line window, flagged") {
    auto src = SourceTree::from_files({{"org/x/Foo.java", "class Foo {\n  void f() {\n    go();\n"}});
    auto ctx = extract_context(warning_at(3, 3), &src);
    CHECK(ctx.scope == ContextScope::LineWindow);
    CHECK(ctx.source_text == "    go();");
    CHECK(std::find(ctx.flags.begin(), ctx.flags.end(), "unparseable file") != ctx.flags.end());
}

TEST_CASE("tokenize: cap semantics") {
    CHECK(tokenize("").tokens.empty());
    std::string text;
    for (int i = 0; i < 150; ++i) text += "x = y ;";  // 4 tokens each
    auto seq = tokenize(text, 256);
    CHECK(seq.tokens.size() == 256);
    CHECK(seq.truncated);
    CHECK(seq.texts()[0] == "x");
    auto full = tokenize(text, 0);
    CHECK(full.tokens.size() == 600);
    CHECK(!full.truncated);
    CHECK(!tokenize("a b", 2).truncated);
}

TEST_CASE("abstraction: worked examples") {
    CHECK(joined(abstract_context(method_context("int a = 1;"))) == "int intVar1 = intLiteral1 ;");
    CHECK(abstract_context(method_context("int a = 1;")).tokens.rendered() == "int intVar1 = intLiteral1;");
    CHECK(abstract_context(method_context("int a = 1; a = 2;")).tokens.rendered() ==
          "int intVar1 = intLiteral1; intVar1 = intLiteral2;");
    CHECK(tokenize("f(a[0], b).g();").rendered() == "f(a[0], b).g();");
    CHECK(joined(abstract_context(method_context("int a = 1; a = 2;"))) ==
          "int intVar1 = intLiteral1 ; intVar1 = intLiteral2 ;");
    auto ret = abstract_context(method_context("return;"));
    CHECK(joined(ret) == "return ;");
    CHECK(ret.mapping.empty());
    CHECK(joined(abstract_context(method_context("String s = \"x\"; s = \"x\";"))) ==
          "idVar1 StringVar1 = StringLiteral1 ; StringVar1 = StringLiteral1 ;");
    CHECK(joined(abstract_context(method_context("List<String> xs; int[] ys; Foo f = null;"))) ==
          "idVar1 < idVar2 > refVar1 ; int [ ] intArrayVar1 ; idVar3 refVar2 = nullLiteral1 ;");
}

TEST_CASE("abstraction: lexical kinds when the lex is not clean") {
    auto a = abstract_context(method_context("int a = 1; # String s = \"t\";"));
    CHECK(!a.typed);
    CHECK(a.tokens.lexical_errors);
    CHECK(joined(a).find("idVar1 = intLiteral1") != std::string::npos);
    CHECK(joined(a).find("strLiteral1") != std::string::npos);
    CHECK_THROWS_AS(abstract_context(RawContext{}), Error);
}

TEST_CASE("abstraction: round trip, alpha consistency and vocabulary reduction") {
    std::mt19937_64 rng(17);
    std::set<std::string> raw_vocab, abs_vocab;
    for (std::size_t i = 0; i < 100; ++i) {
        auto method = testing::random_method(rng, i);
        auto raw = method_context(method);
        auto abs = abstract_context(raw, {true, 0});
        CHECK(abs.typed);
        CHECK(deabstract(abs) == tokenize(method, 0).texts());
        for (const auto& t : tokenize(method, 0).texts()) raw_vocab.insert(t);
        for (const auto& t : abs.tokens.texts()) abs_vocab.insert(t);

        auto names = testing::renamable_identifiers(method);
        auto from = names[uniform_index(rng, names.size())];
        auto renamed = testing::rename_identifier(method, from, "zz" + std::to_string(i) + "renamed");
        CHECK(tokenize(renamed, 0).texts() != tokenize(method, 0).texts());
        CHECK(abstract_context(method_context(renamed), {true, 0}).tokens.texts() == abs.tokens.texts());
    }
    CHECK(abs_vocab.size() <= raw_vocab.size());
}

TEST_CASE("abstraction truncates after abstracting") {
    std::string text;
    for (int i = 0; i < 100; ++i) text += "int v" + std::to_string(i) + " = " + std::to_string(i) + ";";
    auto abs = abstract_context(method_context(text), {true, 256});
    CHECK(abs.tokens.tokens.size() == 256);
    CHECK(abs.tokens.truncated);
    auto full = abstract_context(method_context(text), {true, 0});
    for (std::size_t i = 0; i < 256; ++i) CHECK(abs.tokens.tokens[i].text == full.tokens.tokens[i].text);
}
