#pragma once

// Ground-truth labeling: lifetimes, the median-lifetime filter for open chains and
// imported manual review decisions for closed chains.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "awi/core.hpp"
#include "awi/tracking.hpp"

namespace awi {

struct Lifetime {
    std::string chain_id;
    Duration duration{0};
    bool low_confidence = false;  // series timestamps were synthesized
};

/// Disappeared chains: t(disappearance commit) - t(first seen).
/// Persisting chains: t(last compilable commit) - t(first seen).
Lifetime lifetime(const EvolutionChain& chain, const CommitSeries& series);

struct ReviewDecision {
    std::string chain_id;
    LabelKind verdict = LabelKind::Unknown;
    std::string reviewer;
    std::string note;
};

enum class Provenance { ReviewedClosed, LifetimeFiltered, ExcludedUnknown };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct GroundTruthLabel {
    std::string chain_id;
    LabelKind kind = LabelKind::Unknown;
    Provenance provenance = Provenance::ExcludedUnknown;
    Duration lifetime{0};

    bool labeled() const { return provenance != Provenance::ExcludedUnknown; }
};

/// Lower median of the given actionable lifetimes. Throws Error("no actionable baseline") when empty.
Duration median_actionable_lifetime(std::span<const Lifetime> actionable);

/// Lifetime strictly greater than the median -> Unactionable, otherwise excluded as Unknown.
std::vector<GroundTruthLabel> filter_open(std::span<const Lifetime> open, Duration median);

struct LabelingResult {
    std::vector<GroundTruthLabel> labels;  // same order as the input chains
    std::optional<Duration> median;        // unset when there was no actionable baseline
    std::vector<std::string> notes;
};

/// Routes every chain to exactly one ground-truth label. Throws Error listing review ids that
/// match no chain, or chains reviewed more than once.
LabelingResult finalize_labels(const std::vector<EvolutionChain>& chains,
                               std::span<const ReviewDecision> reviews, const CommitSeries& series);

/// Review file: {"chain_id", "verdict", "reviewer", "note"} per line.
std::vector<ReviewDecision> reviews_from_jsonl(std::string_view text);
std::string reviews_to_jsonl(std::span<const ReviewDecision> reviews);

/// Closed chains awaiting review, as review records with an empty reviewer and verdict "unknown".
std::string review_queue_to_jsonl(const std::vector<EvolutionChain>& chains);

/// Label dump: chain id, kind, provenance, lifetime seconds.
std::string labels_to_jsonl(std::span<const GroundTruthLabel> labels);
std::vector<GroundTruthLabel> labels_from_jsonl(std::string_view text);

}  // namespace awi
