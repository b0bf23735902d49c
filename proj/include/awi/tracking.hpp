#pragma once

// Warning matching between consecutive compilable commits and evolution-chain assembly.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "awi/core.hpp"
#include "awi/source_tree.hpp"

namespace awi {

/// Ordered from strongest to weakest.
enum class MatchStrategy { Location, Snippet, Hash };

std::string_view to_string(MatchStrategy s);
MatchStrategy match_strategy_from_string(std::string_view s);

struct MatchDecision {
    Warning pre;
    Warning post;
    MatchStrategy strategy = MatchStrategy::Location;

    /// 0 is strongest.
    int confidence_rank() const { return static_cast<int>(strategy); }
};

struct TrackingOptions {
    int line_tolerance = 3;
};

bool match_location(const Warning& pre, const Warning& post, int line_tolerance = 3);

struct SnippetMatch {
    bool matched = false;
    bool unavailable = false;  // a snapshot, file or line range was missing
};

SnippetMatch match_snippet(const Warning& pre, const Warning& post, const SourceTree* pre_source,
                           const SourceTree* post_source);

/// Normalized text of the warning's lines, if the source and line info are available.
std::optional<std::string> warning_snippet(const Warning& w, const SourceTree* source);

/// Digest over (type, normalized snippet or message, simple class name, method name).
std::uint64_t warning_digest(const Warning& w, const SourceTree* source);

bool match_hash(const Warning& pre, const Warning& post, const SourceTree* pre_source = nullptr,
                const SourceTree* post_source = nullptr);

/// One-to-one partial matching of two consecutive compilable snapshots, applying the
/// Location, Snippet and Hash stages in order. Within a stage, ties are broken by
/// line distance, then by warning_key of pre and post.
std::vector<MatchDecision> match_pair(const WarningSnapshot& pre, const WarningSnapshot& post,
                                      const SourceSet& sources, const TrackingOptions& options = {});

enum class Disappearance { PersistsToEnd, DisappearedWithCodeChange, DisappearedOtherwise };

std::string_view to_string(Disappearance d);
Disappearance disappearance_from_string(std::string_view s);

struct EvolutionChain {
    std::string id;
    std::vector<Warning> warnings;      // one per consecutive compilable commit
    std::vector<MatchStrategy> links;   // links[i] joins warnings[i] and warnings[i + 1]
    Disappearance disappearance = Disappearance::PersistsToEnd;
    std::optional<CommitRef> disappeared_in;  // first compilable commit without the warning
    std::vector<std::string> flags;

    const CommitRef& first_seen() const { return warnings.front().commit; }
    const CommitRef& last_seen() const { return warnings.back().commit; }
    const Warning& last_warning() const { return warnings.back(); }
    bool has_flag(std::string_view f) const;
};

namespace chain_flags {
inline constexpr std::string_view kFileDeleted = "file deleted";
inline constexpr std::string_view kSourcesMissing = "sources missing";
inline constexpr std::string_view kNoLineInfo = "no line info";
}  // namespace chain_flags

/// Builds evolution chains over the compilable snapshots (ordinal order). Throws Error if the
/// snapshots are out of order or reference non-compilable commits.
std::vector<EvolutionChain> track_series(const CommitSeries& series,
                                         const std::vector<WarningSnapshot>& snapshots,
                                         const SourceSet& sources, const TrackingOptions& options = {});

enum class InitialKind { Closed, Open, UnknownInit };

std::string_view to_string(InitialKind k);

struct InitialLabel {
    std::string chain_id;
    InitialKind kind = InitialKind::UnknownInit;
};

InitialLabel initial_label(const EvolutionChain& chain);

/// Chain dump: one record per chain with id, type, per-commit presence vector
/// ('1' present, '0' absent, '.' non-compilable), strategy sequence, disappearance cause and
/// the full occurrence list.
std::string chains_to_jsonl(const std::vector<EvolutionChain>& chains, const CommitSeries& series);
std::vector<EvolutionChain> chains_from_jsonl(std::string_view text, const CommitSeries& series);

}  // namespace awi
