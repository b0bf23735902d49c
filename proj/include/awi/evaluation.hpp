#pragma once

// AUC evaluation, multi-model overlap analysis and report rendering.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "awi/classifier.hpp"
#include "awi/core.hpp"

namespace awi {

struct ScoredLabel {
    double score = 0.0;
    int label = 0;  // 1 = actionable
};

/// Mann-Whitney AUC: (wins + 0.5 ties) / (P * N) over all positive-negative pairs, computed by
/// rank sums in O(n log n). Throws Error("AUC undefined ...") unless both classes are present.
double auc(std::span<const ScoredLabel> scored);

struct EvalReport {
    std::string model;
    std::string scenario;
    std::string group;  // e.g. the scenario variant; used to group rendered tables
    std::optional<double> auc;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::vector<std::string> missing_ids;
    bool partial = false;
    std::vector<std::string> notes;
    std::map<std::string, std::string> provenance;  // seeds, config digests
};

/// Scores are matched to `labels` (the test set) by chain id. Throws Error when no test id has
/// a score.
EvalReport evaluate(std::span<const PredictionScore> scores, const std::map<std::string, LabelKind>& labels,
                    std::string model, std::string scenario, std::string group = {});

struct OverlapReport {
    std::vector<std::string> models;
    /// Bit i of the key set <=> model i classified the warning correctly. Every subset appears.
    std::map<std::uint32_t, std::size_t> regions;
    std::size_t total = 0;
    std::size_t union_correct = 0;
    /// union_correct / total: an oracle-ensemble accuracy, not an AUC.
    double union_accuracy = 0.0;

    std::string region_name(std::uint32_t mask) const;
};

using ModelPredictions = std::map<std::string, int>;  // chain id -> predicted label

/// Throws Error listing ids missing from any model's predictions.
OverlapReport overlap(const std::vector<std::pair<std::string, ModelPredictions>>& per_model,
                      const std::map<std::string, int>& truth);

struct RenderedFiles {
    std::filesystem::path json;
    std::filesystem::path text;
};

/// Writes report.json and report.txt under `dir`, grouped by report group in a deterministic
/// order. Throws Error("nothing to render") for an empty report list.
RenderedFiles render_report(std::span<const EvalReport> reports, const std::filesystem::path& dir,
                            std::span<const OverlapReport> overlaps = {});

std::string eval_reports_to_json(std::span<const EvalReport> reports);
std::vector<EvalReport> eval_reports_from_json(std::string_view text);

}  // namespace awi
