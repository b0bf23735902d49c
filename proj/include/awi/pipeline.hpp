#pragma once

// Stage-by-stage orchestration of the triage workflow over an output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "awi/classifier.hpp"
#include "awi/dataset.hpp"
#include "awi/jsonl.hpp"

namespace awi {

inline constexpr std::string_view kToolVersion = "awi 0.1.0";

struct ExternalScoreSource {
    std::string name;
    std::filesystem::path path;
};

struct PipelineConfig {
    std::vector<std::filesystem::path> manifests;
    std::optional<std::filesystem::path> reviews;
    bool method_context = true;
    bool abstract = false;
    int window = 0;
    std::size_t cap = 256;
    int line_tolerance = 3;
    SplitRatios ratios;
    std::uint64_t seed = 42;
    std::vector<ScenarioVariant> scenarios;  // empty: scenario mode off
    std::vector<double> fractions;           // empty: no fine-tuning ladder
    ClassifierConfig classifier;
    std::vector<ExternalScoreSource> external_scores;
    std::filesystem::path out;
    unsigned jobs = 1;

    ContextVariant variant() const;
    /// Throws Error describing the first violated constraint.
    void validate() const;
    /// Paths inside the document are resolved against `base_dir`.
    static PipelineConfig from_json(const Json& doc, const std::filesystem::path& base_dir);
    static PipelineConfig load(const std::filesystem::path& path);
    Json to_json() const;
    /// Digest of everything that affects artifacts (excludes out and jobs).
    std::string digest() const;
};

/// Parses "within1,cross2" / "all" / "none".
std::vector<ScenarioVariant> parse_scenario_list(std::string_view text);
/// Parses "0,0.2,0.4".
std::vector<double> parse_fraction_list(std::string_view text);

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

enum class Stage { Ingest, Track, Label, Context, Split, Scenarios, Train, ImportScores, Eval, Report };

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

/// Runs one stage, reading upstream artifacts from config.out. Throws StageError.
void run_stage(Stage stage, const PipelineConfig& config);

struct PipelineResult {
    bool ok = true;
    std::string failed_stage;
    std::string message;
};

/// Validates the config, writes the run manifest and runs every applicable stage in order.
/// Scenario, ladder and import stages run only when configured. A failure stops the run and is
/// recorded in the run manifest; earlier artifacts are kept.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace awi
