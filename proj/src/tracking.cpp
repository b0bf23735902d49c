#include "awi/tracking.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <tuple>

#include "awi/ingest.hpp"
#include "awi/jsonl.hpp"

namespace awi {

std::string_view to_string(MatchStrategy s) {
    switch (s) {
        case MatchStrategy::Location: return "location";
        case MatchStrategy::Snippet: return "snippet";
        case MatchStrategy::Hash: return "hash";
    }
    return "location";
}

MatchStrategy match_strategy_from_string(std::string_view s) {
    if (s == "location") return MatchStrategy::Location;
    if (s == "snippet") return MatchStrategy::Snippet;
    if (s == "hash") return MatchStrategy::Hash;
    throw Error("unknown match strategy '" + std::string(s) + "'");
}

std::string_view to_string(Disappearance d) {
    switch (d) {
        case Disappearance::PersistsToEnd: return "persists_to_end";
        case Disappearance::DisappearedWithCodeChange: return "disappeared_with_code_change";
        case Disappearance::DisappearedOtherwise: return "disappeared_otherwise";
    }
    return "persists_to_end";
}

Disappearance disappearance_from_string(std::string_view s) {
    if (s == "persists_to_end") return Disappearance::PersistsToEnd;
    if (s == "disappeared_with_code_change") return Disappearance::DisappearedWithCodeChange;
    if (s == "disappeared_otherwise") return Disappearance::DisappearedOtherwise;
    throw Error("unknown disappearance cause '" + std::string(s) + "'");
}

std::string_view to_string(InitialKind k) {
    switch (k) {
        case InitialKind::Closed: return "closed";
        case InitialKind::Open: return "open";
        case InitialKind::UnknownInit: return "unknown";
    }
    return "unknown";
}

bool EvolutionChain::has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

bool match_location(const Warning& pre, const Warning& post, int line_tolerance) {
    if (pre.type != post.type) return false;
    const auto& a = pre.location;
    const auto& b = post.location;
    if (a.has_line_info() != b.has_line_info()) return false;
    return a.file_path == b.file_path && a.class_name == b.class_name &&
           a.method_signature == b.method_signature &&
           std::abs(a.start_line - b.start_line) <= line_tolerance;
}

std::optional<std::string> warning_snippet(const Warning& w, const SourceTree* source) {
    if (!source || !w.location.has_line_info()) return std::nullopt;
    auto text = source->lines(w.location.file_path, w.location.start_line, w.location.end_line);
    if (!text) return std::nullopt;
    auto normalized = normalize_whitespace(*text);
    if (normalized.empty()) return std::nullopt;
    return normalized;
}

namespace {

bool signatures_compatible(const Warning& a, const Warning& b) {
    const auto& sa = a.location.method_signature;
    const auto& sb = b.location.method_signature;
    return !sa || !sb || *sa == *sb;
}

std::string simple_class_name(const std::optional<std::string>& cls) {
    if (!cls) return {};
    auto dot = cls->rfind('.');
    return dot == std::string::npos ? *cls : cls->substr(dot + 1);
}

std::string method_name(const std::optional<std::string>& sig) {
    if (!sig) return {};
    return sig->substr(0, sig->find('('));
}

std::uint64_t digest_with_snippet(const Warning& w, const std::optional<std::string>& snippet) {
    std::string material = w.type;
    material.push_back('\x1f');
    material += snippet ? "S:" + *snippet : "M:" + w.message;
    material.push_back('\x1f');
    material += simple_class_name(w.location.class_name);
    material.push_back('\x1f');
    material += method_name(w.location.method_signature);
    return fnv1a64(material);
}

}  // namespace

SnippetMatch match_snippet(const Warning& pre, const Warning& post, const SourceTree* pre_source,
                           const SourceTree* post_source) {
    if (pre.type != post.type) return {};
    auto a = warning_snippet(pre, pre_source);
    auto b = warning_snippet(post, post_source);
    if (!a || !b) return {false, true};
    return {*a == *b && signatures_compatible(pre, post), false};
}

std::uint64_t warning_digest(const Warning& w, const SourceTree* source) {
    return digest_with_snippet(w, warning_snippet(w, source));
}

bool match_hash(const Warning& pre, const Warning& post, const SourceTree* pre_source,
                const SourceTree* post_source) {
    if (pre.type != post.type) return false;
    return warning_digest(pre, pre_source) == warning_digest(post, post_source);
}

namespace {

const SourceTree* find_source(const SourceSet& sources, std::size_t ordinal) {
    auto it = sources.find(ordinal);
    return it == sources.end() ? nullptr : &it->second;
}

struct IndexMatch {
    std::size_t pre;
    std::size_t post;
    MatchStrategy strategy;
};

std::vector<IndexMatch> match_indices(const WarningSnapshot& pre, const WarningSnapshot& post,
                                      const SourceSet& sources, const TrackingOptions& options) {
    const auto& pw = pre.warnings();
    const auto& qw = post.warnings();
    const SourceTree* ps = find_source(sources, pre.commit().ordinal);
    const SourceTree* qs = find_source(sources, post.commit().ordinal);

    std::vector<std::optional<std::string>> p_snip(pw.size()), q_snip(qw.size());
    std::vector<std::string> p_key(pw.size()), q_key(qw.size());
    std::vector<std::uint64_t> p_digest(pw.size()), q_digest(qw.size());
    for (std::size_t i = 0; i < pw.size(); ++i) {
        p_snip[i] = warning_snippet(pw[i], ps);
        p_key[i] = warning_key(pw[i]);
        p_digest[i] = digest_with_snippet(pw[i], p_snip[i]);
    }
    for (std::size_t j = 0; j < qw.size(); ++j) {
        q_snip[j] = warning_snippet(qw[j], qs);
        q_key[j] = warning_key(qw[j]);
        q_digest[j] = digest_with_snippet(qw[j], q_snip[j]);
    }

    // Candidates only ever pair warnings of the same type.
    std::map<std::string_view, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_type;
    for (std::size_t i = 0; i < pw.size(); ++i) by_type[pw[i].type].first.push_back(i);
    for (std::size_t j = 0; j < qw.size(); ++j) by_type[qw[j].type].second.push_back(j);

    std::vector<bool> pre_used(pw.size()), post_used(qw.size());
    std::vector<IndexMatch> out;

    auto run_stage = [&](MatchStrategy strategy, auto&& predicate) {
        std::vector<std::tuple<int, const std::string*, const std::string*, std::size_t, std::size_t>> cands;
        for (const auto& [type, group] : by_type) {
            for (std::size_t i : group.first) {
                if (pre_used[i]) continue;
                for (std::size_t j : group.second) {
                    if (post_used[j] || !predicate(i, j)) continue;
                    int dist = std::abs(pw[i].location.start_line - qw[j].location.start_line);
                    cands.emplace_back(dist, &p_key[i], &q_key[j], i, j);
                }
            }
        }
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
            if (*std::get<1>(a) != *std::get<1>(b)) return *std::get<1>(a) < *std::get<1>(b);
            return *std::get<2>(a) < *std::get<2>(b);
        });
        for (const auto& c : cands) {
            auto i = std::get<3>(c);
            auto j = std::get<4>(c);
            if (pre_used[i] || post_used[j]) continue;
            pre_used[i] = post_used[j] = true;
            out.push_back({i, j, strategy});
        }
    };

    run_stage(MatchStrategy::Location, [&](std::size_t i, std::size_t j) {
        return match_location(pw[i], qw[j], options.line_tolerance);
    });
    run_stage(MatchStrategy::Snippet, [&](std::size_t i, std::size_t j) {
        return p_snip[i] && q_snip[j] && *p_snip[i] == *q_snip[j] && signatures_compatible(pw[i], qw[j]);
    });
    run_stage(MatchStrategy::Hash, [&](std::size_t i, std::size_t j) { return p_digest[i] == q_digest[j]; });
    return out;
}

std::string chain_id(const std::string& project, std::size_t ordinal, std::size_t index) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "c%04zu-w%04zu", ordinal, index);
    return project.empty() ? std::string(buf) : project + ":" + buf;
}

}  // namespace

std::vector<MatchDecision> match_pair(const WarningSnapshot& pre, const WarningSnapshot& post,
                                      const SourceSet& sources, const TrackingOptions& options) {
    std::vector<MatchDecision> out;
    for (const auto& m : match_indices(pre, post, sources, options))
        out.push_back({pre.warnings()[m.pre], post.warnings()[m.post], m.strategy});
    return out;
}

std::vector<EvolutionChain> track_series(const CommitSeries& series,
                                         const std::vector<WarningSnapshot>& snapshots,
                                         const SourceSet& sources, const TrackingOptions& options) {
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const auto& c = snapshots[k].commit();
        if (c.ordinal >= series.commits.size() || !series.commits[c.ordinal].compilable)
            throw Error("snapshot for commit '" + c.id + "' is not a compilable commit of the series");
        if (k > 0 && c.ordinal <= snapshots[k - 1].commit().ordinal)
            throw Error("snapshots are not in ordinal order");
    }

    std::vector<EvolutionChain> chains;
    if (snapshots.empty()) return chains;

    // active[i] = chain index continued by warning i of the current snapshot.
    std::vector<std::size_t> active;
    const auto& first = snapshots.front();
    for (std::size_t i = 0; i < first.size(); ++i) {
        EvolutionChain ch;
        ch.id = chain_id(series.project, first.commit().ordinal, i);
        ch.warnings.push_back(first.warnings()[i]);
        chains.push_back(std::move(ch));
        active.push_back(chains.size() - 1);
    }

    auto close_chain = [&](EvolutionChain& ch, const WarningSnapshot& pre, const WarningSnapshot& post) {
        ch.disappeared_in = post.commit();
        const SourceTree* ps = find_source(sources, pre.commit().ordinal);
        const SourceTree* qs = find_source(sources, post.commit().ordinal);
        const auto& path = ch.last_warning().location.file_path;
        if (!ps || !qs || !ps->digest(path)) {
            ch.disappearance = Disappearance::DisappearedOtherwise;
            ch.flags.emplace_back(chain_flags::kSourcesMissing);
            return;
        }
        auto after = qs->digest(path);
        if (!after) {
            ch.disappearance = Disappearance::DisappearedWithCodeChange;
            ch.flags.emplace_back(chain_flags::kFileDeleted);
        } else if (*after != *ps->digest(path)) {
            ch.disappearance = Disappearance::DisappearedWithCodeChange;
        } else {
            ch.disappearance = Disappearance::DisappearedOtherwise;
        }
    };

    for (std::size_t k = 0; k + 1 < snapshots.size(); ++k) {
        const auto& pre = snapshots[k];
        const auto& post = snapshots[k + 1];
        auto matches = match_indices(pre, post, sources, options);
        std::vector<std::optional<std::size_t>> next(post.size());
        std::vector<bool> continued(pre.size());
        for (const auto& m : matches) {
            auto& ch = chains[active[m.pre]];
            ch.warnings.push_back(post.warnings()[m.post]);
            ch.links.push_back(m.strategy);
            next[m.post] = active[m.pre];
            continued[m.pre] = true;
        }
        for (std::size_t i = 0; i < pre.size(); ++i)
            if (!continued[i]) close_chain(chains[active[i]], pre, post);
        std::vector<std::size_t> new_active(post.size());
        for (std::size_t j = 0; j < post.size(); ++j) {
            if (next[j]) {
                new_active[j] = *next[j];
                continue;
            }
            EvolutionChain ch;
            ch.id = chain_id(series.project, post.commit().ordinal, j);
            ch.warnings.push_back(post.warnings()[j]);
            chains.push_back(std::move(ch));
            new_active[j] = chains.size() - 1;
        }
        active = std::move(new_active);
    }

    for (auto& ch : chains)
        if (!ch.last_warning().location.has_line_info()) ch.flags.emplace_back(chain_flags::kNoLineInfo);
    return chains;
}

InitialLabel initial_label(const EvolutionChain& chain) {
    switch (chain.disappearance) {
        case Disappearance::PersistsToEnd: return {chain.id, InitialKind::Open};
        case Disappearance::DisappearedWithCodeChange: return {chain.id, InitialKind::Closed};
        case Disappearance::DisappearedOtherwise: return {chain.id, InitialKind::UnknownInit};
    }
    return {chain.id, InitialKind::UnknownInit};
}

std::string chains_to_jsonl(const std::vector<EvolutionChain>& chains, const CommitSeries& series) {
    std::vector<Json> records;
    records.reserve(chains.size());
    for (const auto& ch : chains) {
        std::string presence;
        for (const auto& c : series.commits) presence.push_back(c.compilable ? '0' : '.');
        for (const auto& w : ch.warnings)
            if (w.commit.ordinal < presence.size()) presence[w.commit.ordinal] = '1';
        Json r;
        r["chain_id"] = ch.id;
        r["type"] = ch.warnings.front().type;
        r["presence"] = presence;
        Json strategies = Json::array();
        for (auto s : ch.links) strategies.push_back(to_string(s));
        r["strategies"] = strategies;
        r["disappearance"] = to_string(ch.disappearance);
        r["initial_label"] = to_string(initial_label(ch).kind);
        r["first_seen"] = ch.first_seen().id;
        r["last_seen"] = ch.last_seen().id;
        r["disappeared_in"] = ch.disappeared_in ? Json(ch.disappeared_in->id) : Json(nullptr);
        r["flags"] = ch.flags;
        Json occurrences = Json::array();
        for (const auto& w : ch.warnings) {
            Json o = Json::parse(export_normalized_report(std::span<const Warning>(&w, 1)));
            o["ordinal"] = w.commit.ordinal;
            occurrences.push_back(std::move(o));
        }
        r["occurrences"] = std::move(occurrences);
        records.push_back(std::move(r));
    }
    return to_jsonl(records);
}

namespace {

const CommitRef& commit_by_id(const CommitSeries& series, const std::string& id) {
    for (const auto& c : series.commits)
        if (c.id == id) return c;
    throw Error("chain dump references unknown commit '" + id + "'");
}

}  // namespace

std::vector<EvolutionChain> chains_from_jsonl(std::string_view text, const CommitSeries& series) {
    std::vector<EvolutionChain> chains;
    auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        try {
            Json r = Json::parse(lines[n]);
            EvolutionChain ch;
            ch.id = r.at("chain_id").get<std::string>();
            for (const auto& s : r.at("strategies")) ch.links.push_back(match_strategy_from_string(s.get<std::string>()));
            ch.disappearance = disappearance_from_string(r.at("disappearance").get<std::string>());
            if (!r.at("disappeared_in").is_null())
                ch.disappeared_in = commit_by_id(series, r.at("disappeared_in").get<std::string>());
            ch.flags = r.at("flags").get<std::vector<std::string>>();
            for (const auto& o : r.at("occurrences")) {
                auto ordinal = o.at("ordinal").get<std::size_t>();
                auto parsed = parse_normalized_report(o.dump(), series.commits.at(ordinal));
                if (!parsed.errors.empty()) throw Error(parsed.errors.front().message);
                ch.warnings.push_back(std::move(parsed.warnings.front()));
            }
            if (ch.warnings.empty() || ch.links.size() + 1 != ch.warnings.size())
                throw Error("inconsistent occurrence/strategy counts");
            chains.push_back(std::move(ch));
        } catch (const std::exception& e) {
            throw Error("chain dump line " + std::to_string(n + 1) + ": " + e.what());
        }
    }
    return chains;
}

}  // namespace awi
