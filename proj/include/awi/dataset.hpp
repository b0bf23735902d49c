#pragma once

// Labeled datasets: stratified splits, within/cross-project scenarios, fine-tuning
// ladders and the corpus export format.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "awi/core.hpp"

namespace awi {

enum class ContextVariant { RawMethod, Abstracted, LineOnly };

std::string_view to_string(ContextVariant v);
ContextVariant context_variant_from_string(std::string_view s);

struct LabeledExample {
    std::string chain_id;
    std::string project;
    std::string warning_type;
    std::string category;
    ContextVariant variant = ContextVariant::RawMethod;
    std::vector<std::string> tokens;
    LabelKind label = LabelKind::Unactionable;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

/// 1 = actionable, 0 = unactionable. Throws for Unknown.
int label_value(LabelKind k);

struct SplitRatios {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;

    /// Throws Error unless all parts are non-negative and sum to 1.
    void validate() const;
    /// Parses "a/b/c".
    static SplitRatios parse(std::string_view text);
    friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

/// Seeded per-class shuffle and contiguous slicing. Validation and test sizes are the rounded
/// ratio shares (at least one example for each nonzero part); train takes the remainder.
/// Result does not depend on input order. Throws Error("stratification infeasible ...") when a
/// class has fewer examples than nonzero parts, or on duplicate chain ids.
DatasetSplit stratified_split(std::vector<LabeledExample> examples, const SplitRatios& ratios,
                              std::uint64_t seed);

enum class ScenarioVariant { Within1, Within2, Cross1, Cross2 };

std::string_view to_string(ScenarioVariant v);
ScenarioVariant scenario_variant_from_string(std::string_view s);

struct ScenarioSpec {
    ScenarioVariant variant = ScenarioVariant::Within1;
    std::string held_out_project;
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
};

/// Four scenarios per project, ordered by project name then variant. Each project is split
/// 50/50 by class; the held-out half is the test set of all four variants.
std::vector<ScenarioSpec> build_scenarios(const std::vector<LabeledExample>& examples, std::uint64_t seed);

/// Nested random (not stratified) subsets of `train` of size round(f * |train|) per fraction.
/// Throws Error unless fractions are sorted and within [0, 1].
std::vector<std::vector<LabeledExample>> finetune_ladder(std::vector<LabeledExample> train,
                                                         std::span<const double> fractions,
                                                         std::uint64_t seed);

/// Corpus export: one record per example with chain id, project, label (0/1), variant,
/// space-joined tokens in "text" and the exact token list in "tokens".
std::string corpus_to_jsonl(std::span<const LabeledExample> examples, std::string_view split = {});
std::vector<LabeledExample> corpus_from_jsonl(std::string_view text);
std::size_t export_corpus(std::span<const LabeledExample> examples, const std::filesystem::path& path,
                          std::string_view split = {});
std::vector<LabeledExample> import_corpus(const std::filesystem::path& path);

/// Unbiased integer in [0, n) from a 64-bit Mersenne Twister (portable across standard libraries).
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace awi
