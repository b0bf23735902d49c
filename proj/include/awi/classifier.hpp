#pragma once

// Trainable classifier contract, the native embedding-bag baseline and score-file import.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "awi/dataset.hpp"
#include "awi/ingest.hpp"

namespace awi {

enum class ClassifierKind { NativeBaseline, External };

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::NativeBaseline;
    std::string name = "baseline";
    std::size_t sequence_cap = 256;
    std::size_t embedding_width = 32;
    int epochs = 30;
    std::size_t batch_size = 4;
    double learning_rate = 5e-5;
    std::uint64_t seed = 0;
    double threshold = 0.5;

    void validate() const;
};

/// Mean-pooled token embeddings -> linear head (2 classes) -> softmax.
struct EmbeddingBagParams {
    std::size_t vocab_size = 0;
    std::size_t width = 0;
    std::vector<double> embedding;  // vocab_size x width, row-major; row 0 is the unknown token
    std::vector<double> weight;     // 2 x width
    std::array<double, 2> bias{0.0, 0.0};

    std::size_t parameter_count() const { return embedding.size() + weight.size() + 2; }
    /// Flat view order: embedding, weight, bias.
    double& at(std::size_t flat_index);
    double at(std::size_t flat_index) const;
};

inline constexpr std::string_view kUnknownToken = "<unk>";

struct TrainedModel {
    ClassifierConfig config;
    std::vector<std::string> vocabulary;  // index -> token; index 0 is kUnknownToken
    std::map<std::string, std::size_t> index;
    EmbeddingBagParams params;
    std::vector<double> training_log;  // mean loss per epoch

    /// Token ids after applying the sequence cap; unseen tokens map to 0.
    std::vector<std::size_t> encode(std::span<const std::string> tokens) const;
};

struct PredictionScore {
    std::string chain_id;
    double score = 0.0;  // probability of label 1 (actionable)
    int predicted_label = 0;

    friend bool operator==(const PredictionScore&, const PredictionScore&) = default;
};

/// Deterministic in (config.seed, corpus). Throws Error for an empty or single-class corpus and
/// when a training loss becomes non-finite.
TrainedModel train(const ClassifierConfig& config, std::span<const LabeledExample> corpus);

/// Initialized but never fitted; used where a scenario has no training data.
TrainedModel untrained_model(const ClassifierConfig& config);

/// Softmax outputs {P(y=0), P(y=1)}.
std::array<double, 2> class_probabilities(const TrainedModel& model, std::span<const std::string> tokens);

std::vector<PredictionScore> predict(const TrainedModel& model, std::span<const LabeledExample> examples);

struct LossGradient {
    double loss = 0.0;
    EmbeddingBagParams gradient;
};

/// Mean cross-entropy over the batch and its analytic gradient. Unknown-token ids (0) are
/// excluded from pooling.
LossGradient loss_and_gradient(const EmbeddingBagParams& params,
                               std::span<const std::vector<std::size_t>> token_ids,
                               std::span<const int> labels);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);

/// Score file: one {"chain_id", "score", "model"} record per line.
std::string scores_to_jsonl(std::span<const PredictionScore> scores, std::string_view model_name);

struct ImportedScores {
    std::vector<PredictionScore> scores;  // first-appearance order, last value wins
    std::vector<RecordError> errors;
    std::size_t duplicates = 0;
    std::string model_name;
};

/// Validates scores in [0, 1] and, when `known_ids` is given, that each chain id is known.
ImportedScores parse_scores(std::string_view text, const std::set<std::string>* known_ids = nullptr,
                            double threshold = 0.5);
ImportedScores import_scores(const std::filesystem::path& path, const std::set<std::string>* known_ids = nullptr,
                             double threshold = 0.5);

}  // namespace awi
