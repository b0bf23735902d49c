#include <doctest.h>

#include <random>
#include <set>

#include "awi/jsonl.hpp"
#include "awi/tracking.hpp"
#include "synth.hpp"

using namespace awi;

namespace {

Warning at(const std::string& file, int line, const std::string& type = "NP_NULL_ON_SOME_PATH",
           std::size_t ordinal = 0) {
    Warning w;
    w.analyzer = "SpotBugs";
    w.category = "CORRECTNESS";
    w.type = type;
    w.priority = 1;
    w.message = type + " in " + file;
    w.location = {file, "org.x.Cls", "run()V", line, line};
    w.commit = {"c" + std::to_string(ordinal), {}, ordinal, true};
    return w;
}

std::string body(int blank_lines_before, const std::string& statement) {
    std::string text = "class Cls {\n";
    for (int i = 0; i < blank_lines_before; ++i) text += "    int f" + std::to_string(i) + ";\n";
    text += "    void run() {\n        " + statement + "\n    }\n}\n";
    return text;
}

}  // namespace

TEST_CASE("match_location examples") {
    CHECK(match_location(at("A.java", 10), at("A.java", 10), 3));
    CHECK(!match_location(at("A.java", 10), at("A.java", 14), 3));
    CHECK(match_location(at("A.java", 10), at("A.java", 12), 3));
    CHECK(!match_location(at("A.java", 10), at("B.java", 10), 3));
    CHECK(!match_location(at("A.java", 10), at("A.java", 10, "OTHER"), 3));
    auto no_lines = at("A.java", 0);
    no_lines.location.end_line = 0;
    CHECK(!match_location(no_lines, at("A.java", 2), 3));
    CHECK(match_location(no_lines, no_lines, 3));
}

TEST_CASE("match_snippet: moved code matches, edited code does not") {
    auto pre_src = SourceTree::from_files({{"A.java", body(0, "foo(bar);")}});
    auto moved_src = SourceTree::from_files({{"A.java", body(20, "  foo(bar);  ")}});
    auto edited_src = SourceTree::from_files({{"A.java", body(0, "foo(baz);")}});
    auto pre = at("A.java", 3);
    auto moved = at("A.java", 23);
    CHECK(match_snippet(pre, moved, &pre_src, &moved_src).matched);
    CHECK(!match_snippet(pre, pre, &pre_src, &edited_src).matched);
    auto missing = match_snippet(pre, moved, &pre_src, nullptr);
    CHECK(!missing.matched);
    CHECK(missing.unavailable);
    auto other_sig = moved;
    other_sig.location.method_signature = "walk()V";
    CHECK(!match_snippet(pre, other_sig, &pre_src, &moved_src).matched);
}

TEST_CASE("match_hash: identical, renamed file and single-token edits") {
    auto src = SourceTree::from_files({{"a/A.java", body(0, "foo(bar);")}, {"b/A.java", body(0, "foo(bar);")}});
    CHECK(match_hash(at("a/A.java", 3), at("a/A.java", 3), &src, &src));
    auto moved = at("b/A.java", 3);
    moved.location.class_name = "org.y.Cls";
    CHECK(match_hash(at("a/A.java", 3), moved, &src, &src));

    std::mt19937_64 rng(99);
    std::vector<std::string> vocab{"a", "b", "c", "x1", "y2", "+", "-", "(", ")", "0", "1", "foo", "bar", "=", "."};
    int collisions = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> tokens;
        for (int i = 0; i < 12; ++i) tokens.push_back(vocab[uniform_index(rng, vocab.size())]);
        auto edited = tokens;
        auto pos = uniform_index(rng, edited.size());
        std::string replacement;
        do replacement = vocab[uniform_index(rng, vocab.size())] + std::to_string(trial);
        while (replacement == edited[pos]);
        edited[pos] = replacement;
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (const auto& t : v) s += t + " ";
            return s;
        };
        auto s1 = SourceTree::from_files({{"A.java", body(0, join(tokens))}});
        auto s2 = SourceTree::from_files({{"A.java", body(0, join(edited))}});
        if (match_hash(at("A.java", 3), at("A.java", 3), &s1, &s2)) ++collisions;
    }
    CHECK(collisions == 0);
}

TEST_CASE("match_pair: identical and disjoint snapshots") {
    CommitRef c0{"c0", {}, 0, true}, c1{"c1", {}, 1, true};
    std::vector<Warning> a, b;
    for (int i = 0; i < 5; ++i) {
        auto w = at("A.java", 10 * (i + 1));
        w.commit = c0;
        a.push_back(w);
        w.commit = c1;
        b.push_back(w);
    }
    auto decisions = match_pair(WarningSnapshot(c0, a), WarningSnapshot(c1, b), {});
    CHECK(decisions.size() == 5);
    for (const auto& d : decisions) CHECK(d.strategy == MatchStrategy::Location);

    std::vector<Warning> other;
    for (auto w : b) {
        w.type = "DIFFERENT";
        other.push_back(w);
    }
    CHECK(match_pair(WarningSnapshot(c0, a), WarningSnapshot(c1, other), {}).empty());
}

TEST_CASE("match_pair: persisting, moved and fixed warnings") {
    SourceSet sources;
    sources.emplace(0, SourceTree::from_files({{"A.java", "a();\nfirst();\nb();\nc();\nd();\nsecond();\nthird();\n"}}));
    std::string post_text = "a();\nfirst();\n";
    for (int i = 0; i < 15; ++i) post_text += "pad();\n";
    post_text += "second();\nfixed();\n";
    sources.emplace(1, SourceTree::from_files({{"A.java", post_text}}));
    CommitRef c0{"c0", {}, 0, true}, c1{"c1", {}, 1, true};
    auto persist = at("A.java", 2, "T", 0);
    auto moved = at("A.java", 6, "T", 0);
    auto fixed = at("A.java", 7, "T", 0);
    auto persist1 = at("A.java", 2, "T", 1);
    auto moved1 = at("A.java", 18, "T", 1);
    auto decisions = match_pair(WarningSnapshot(c0, {persist, moved, fixed}), WarningSnapshot(c1, {persist1, moved1}),
                                sources);
    REQUIRE(decisions.size() == 2);
    std::multiset<MatchStrategy> strategies;
    for (const auto& d : decisions) strategies.insert(d.strategy);
    CHECK(strategies == std::multiset<MatchStrategy>{MatchStrategy::Location, MatchStrategy::Snippet});
    for (const auto& d : decisions) {
        if (d.strategy == MatchStrategy::Snippet) {
            CHECK(d.pre.location.start_line == 6);
            CHECK(d.post.location.start_line == 18);
        }
    }
}

TEST_CASE("match_pair: ambiguity resolved by line distance") {
    CommitRef c0{"c0", {}, 0, true}, c1{"c1", {}, 1, true};
    auto p = at("A.java", 10, "T", 0);
    auto q1 = at("A.java", 12, "T", 1);
    auto q2 = at("A.java", 9, "T", 1);
    auto d = match_pair(WarningSnapshot(c0, {p}), WarningSnapshot(c1, {q1, q2}), {});
    REQUIRE(d.size() == 1);
    CHECK(d[0].post.location.start_line == 9);
}

TEST_CASE("match_pair is a partial injection on random snapshots") {
    std::mt19937_64 rng(5);
    CommitRef c0{"c0", {}, 0, true}, c1{"c1", {}, 1, true};
    for (int round = 0; round < 100; ++round) {
        std::vector<Warning> a, b;
        for (int i = 0; i < 20; ++i) {
            auto w = at("F" + std::to_string(uniform_index(rng, 3)) + ".java",
                        static_cast<int>(1 + uniform_index(rng, 30)), uniform_index(rng, 2) ? "T1" : "T2", 0);
            a.push_back(w);
            w.location.start_line = w.location.end_line = static_cast<int>(1 + uniform_index(rng, 30));
            w.commit = c1;
            b.push_back(w);
        }
        WarningSnapshot sa(c0, a), sb(c1, b);
        auto d = match_pair(sa, sb, {});
        std::set<std::string> pre, post;
        for (const auto& m : d) {
            CHECK(pre.insert(warning_key(m.pre)).second);
            CHECK(post.insert(warning_key(m.post)).second);
            CHECK(m.pre.type == m.post.type);
        }
        CHECK(d.size() <= std::min(sa.size(), sb.size()));
    }
}

TEST_CASE("strategy monotonicity on unchanged code") {
    auto s = testing::make_synthetic_series();
    const auto& pre = s.snapshots[0];
    const auto& post = s.snapshots[1];
    auto decisions = match_pair(pre, post, s.sources);
    int checked = 0;
    for (const auto& d : decisions) {
        if (d.strategy != MatchStrategy::Location || !d.pre.location.has_line_info()) continue;
        const auto* a = &s.sources.at(0);
        const auto* b = &s.sources.at(1);
        if (a->digest(d.pre.location.file_path) != b->digest(d.post.location.file_path)) continue;
        CHECK(match_snippet(d.pre, d.post, a, b).matched);
        CHECK(match_hash(d.pre, d.post, a, b));
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("track_series on the planted synthetic series") {
    auto s = testing::make_synthetic_series();
    auto chains = track_series(s.series, s.snapshots, s.sources);
    CHECK(chains.size() == s.planted.size());

    std::size_t occurrences = 0;
    for (const auto& snap : s.snapshots) occurrences += snap.size();
    std::size_t chained = 0;
    std::set<std::pair<std::size_t, std::string>> seen;
    for (const auto& ch : chains) {
        chained += ch.warnings.size();
        for (const auto& w : ch.warnings) CHECK(seen.emplace(w.commit.ordinal, warning_key(w)).second);
    }
    CHECK(chained == occurrences);

    std::map<std::string, const EvolutionChain*> by_id;
    for (const auto& ch : chains) by_id[ch.id] = &ch;
    std::set<MatchStrategy> used;
    for (const auto& ch : chains)
        for (auto l : ch.links) used.insert(l);
    CHECK(used.size() == 3);
    for (const auto& p : s.planted) {
        CAPTURE(p.name);
        auto it = by_id.find(testing::planted_chain_id(s, p));
        REQUIRE(it != by_id.end());
        CHECK(it->second->warnings.size() == p.occurrences.size());
        CHECK(initial_label(*it->second).kind == p.initial);
        if (p.name == "file-deleted") CHECK(it->second->has_flag(chain_flags::kFileDeleted));
        if (p.name == "package-moved") CHECK(it->second->has_flag(chain_flags::kNoLineInfo));
        if (p.name == "fixed-after-gap") CHECK(it->second->disappeared_in->ordinal == 11);
    }
}

TEST_CASE("track_series: missing sources fall back to DisappearedOtherwise") {
    auto s = testing::make_synthetic_series();
    auto chains = track_series(s.series, s.snapshots, {});
    for (const auto& ch : chains) {
        CHECK(ch.disappearance != Disappearance::DisappearedWithCodeChange);
        if (ch.disappearance == Disappearance::DisappearedOtherwise) CHECK(ch.has_flag(chain_flags::kSourcesMissing));
    }
}

TEST_CASE("track_series is deterministic and rejects misordered snapshots") {
    auto s = testing::make_synthetic_series();
    auto a = chains_to_jsonl(track_series(s.series, s.snapshots, s.sources), s.series);
    auto b = chains_to_jsonl(track_series(s.series, s.snapshots, s.sources), s.series);
    CHECK(a == b);
    auto reversed = s.snapshots;
    std::swap(reversed[0], reversed[1]);
    CHECK_THROWS_AS(track_series(s.series, reversed, s.sources), Error);
}

TEST_CASE("chain dump round trip") {
    auto s = testing::make_synthetic_series();
    auto chains = track_series(s.series, s.snapshots, s.sources);
    auto dump = chains_to_jsonl(chains, s.series);
    auto back = chains_from_jsonl(dump, s.series);
    REQUIRE(back.size() == chains.size());
    for (std::size_t i = 0; i < chains.size(); ++i) {
        CHECK(back[i].id == chains[i].id);
        CHECK(back[i].warnings == chains[i].warnings);
        CHECK(back[i].links == chains[i].links);
        CHECK(back[i].disappearance == chains[i].disappearance);
        CHECK(back[i].flags == chains[i].flags);
    }
    CHECK(chains_to_jsonl(back, s.series) == dump);
    auto first = Json::parse(std::string(split_lines(dump)[0]));
    CHECK(first["presence"].get<std::string>().size() == 20);
    CHECK(first["presence"].get<std::string>()[10] == '.');
}
