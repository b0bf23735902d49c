#include "awi/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "awi/jsonl.hpp"

namespace awi {

void ClassifierConfig::validate() const {
    if (sequence_cap == 0) throw Error("sequence cap must be positive");
    if (embedding_width == 0) throw Error("embedding width must be positive");
    if (epochs <= 0) throw Error("epochs must be positive");
    if (batch_size == 0) throw Error("batch size must be positive");
    if (!(learning_rate > 0)) throw Error("learning rate must be positive");
    if (threshold < 0 || threshold > 1) throw Error("threshold must lie in [0, 1]");
}

double& EmbeddingBagParams::at(std::size_t i) {
    if (i < embedding.size()) return embedding[i];
    i -= embedding.size();
    if (i < weight.size()) return weight[i];
    return bias.at(i - weight.size());
}

double EmbeddingBagParams::at(std::size_t i) const { return const_cast<EmbeddingBagParams&>(*this).at(i); }

std::vector<std::size_t> TrainedModel::encode(std::span<const std::string> tokens) const {
    std::vector<std::size_t> ids;
    const std::size_t n = std::min(tokens.size(), config.sequence_cap);
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = index.find(tokens[i]);
        ids.push_back(it == index.end() ? 0 : it->second);
    }
    return ids;
}

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

EmbeddingBagParams init_params(std::size_t vocab, std::size_t width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EmbeddingBagParams p;
    p.vocab_size = vocab;
    p.width = width;
    p.embedding.assign(vocab * width, 0.0);
    // Row 0 (unknown) stays zero; it is never pooled.
    for (std::size_t i = width; i < p.embedding.size(); ++i) p.embedding[i] = (unit_uniform(rng) - 0.5) * 0.2;
    p.weight.resize(2 * width);
    for (auto& w : p.weight) w = (unit_uniform(rng) - 0.5) * 0.2;
    return p;
}

// Mean of known-token embeddings; zero when there are none.
std::vector<double> pool(const EmbeddingBagParams& p, std::span<const std::size_t> ids, std::size_t& known) {
    std::vector<double> h(p.width, 0.0);
    known = 0;
    for (auto id : ids) {
        if (id == 0 || id >= p.vocab_size) continue;
        ++known;
        const double* row = &p.embedding[id * p.width];
        for (std::size_t k = 0; k < p.width; ++k) h[k] += row[k];
    }
    if (known > 0)
        for (auto& x : h) x /= static_cast<double>(known);
    return h;
}

std::array<double, 2> softmax_head(const EmbeddingBagParams& p, const std::vector<double>& h) {
    std::array<double, 2> z = p.bias;
    for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < p.width; ++k) z[c] += p.weight[c * p.width + k] * h[k];
    double m = std::max(z[0], z[1]);
    double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
    double s = e0 + e1;
    return {e0 / s, e1 / s};
}

TrainedModel empty_model(const ClassifierConfig& config, std::vector<std::string> vocabulary) {
    TrainedModel m;
    m.config = config;
    m.vocabulary = std::move(vocabulary);
    for (std::size_t i = 0; i < m.vocabulary.size(); ++i) m.index.emplace(m.vocabulary[i], i);
    m.index.erase(std::string(kUnknownToken));
    m.params = init_params(m.vocabulary.size(), config.embedding_width, config.seed);
    return m;
}

}  // namespace

LossGradient loss_and_gradient(const EmbeddingBagParams& params,
                               std::span<const std::vector<std::size_t>> token_ids, std::span<const int> labels) {
    if (token_ids.size() != labels.size() || token_ids.empty()) throw Error("loss_and_gradient: bad batch");
    LossGradient out;
    auto& g = out.gradient;
    g.vocab_size = params.vocab_size;
    g.width = params.width;
    g.embedding.assign(params.embedding.size(), 0.0);
    g.weight.assign(params.weight.size(), 0.0);
    g.bias = {0.0, 0.0};
    const double inv_batch = 1.0 / static_cast<double>(labels.size());
    const std::size_t w = params.width;
    for (std::size_t b = 0; b < labels.size(); ++b) {
        std::size_t known = 0;
        auto h = pool(params, token_ids[b], known);
        auto prob = softmax_head(params, h);
        out.loss -= std::log(std::max(prob[labels[b]], 1e-300)) * inv_batch;
        std::array<double, 2> dz{prob[0] * inv_batch, prob[1] * inv_batch};
        dz[labels[b]] -= inv_batch;
        std::vector<double> dh(w, 0.0);
        for (int c = 0; c < 2; ++c) {
            g.bias[c] += dz[c];
            for (std::size_t k = 0; k < w; ++k) {
                g.weight[c * w + k] += dz[c] * h[k];
                dh[k] += dz[c] * params.weight[c * w + k];
            }
        }
        if (known == 0) continue;
        const double share = 1.0 / static_cast<double>(known);
        for (auto id : token_ids[b]) {
            if (id == 0 || id >= params.vocab_size) continue;
            double* row = &g.embedding[id * w];
            for (std::size_t k = 0; k < w; ++k) row[k] += dh[k] * share;
        }
    }
    return out;
}

TrainedModel untrained_model(const ClassifierConfig& config) {
    config.validate();
    return empty_model(config, {std::string(kUnknownToken)});
}

TrainedModel train(const ClassifierConfig& config, std::span<const LabeledExample> corpus) {
    config.validate();
    if (corpus.empty()) throw Error("cannot train on an empty corpus");
    bool has[2] = {false, false};
    for (const auto& e : corpus) has[label_value(e.label)] = true;
    if (!has[0] || !has[1]) throw Error("degenerate corpus: training needs both classes");

    // Vocabulary from the (capped) training tokens, sorted for determinism.
    std::set<std::string> seen;
    for (const auto& e : corpus)
        for (std::size_t i = 0; i < std::min(e.tokens.size(), config.sequence_cap); ++i) seen.insert(e.tokens[i]);
    seen.erase(std::string(kUnknownToken));
    std::vector<std::string> vocabulary{std::string(kUnknownToken)};
    vocabulary.insert(vocabulary.end(), seen.begin(), seen.end());
    TrainedModel model = empty_model(config, std::move(vocabulary));

    std::vector<std::vector<std::size_t>> ids;
    std::vector<int> labels;
    for (const auto& e : corpus) {
        ids.push_back(model.encode(e.tokens));
        labels.push_back(label_value(e.label));
    }

    // Adam; embedding rows are updated lazily (only rows present in the batch).
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    auto& p = model.params;
    const std::size_t w = p.width;
    std::vector<double> m_emb(p.embedding.size()), v_emb(p.embedding.size());
    std::vector<std::size_t> row_steps(p.vocab_size, 0);
    std::vector<double> m_head(p.weight.size() + 2), v_head(p.weight.size() + 2);
    std::size_t step = 0;

    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        seeded_shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<std::vector<std::size_t>> batch_ids;
            std::vector<int> batch_labels;
            for (std::size_t i = start; i < end; ++i) {
                batch_ids.push_back(ids[order[i]]);
                batch_labels.push_back(labels[order[i]]);
            }
            auto lg = loss_and_gradient(p, batch_ids, batch_labels);
            if (!std::isfinite(lg.loss))
                throw Error("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch starting " +
                            std::to_string(start) + " (learning rate " + std::to_string(config.learning_rate) + ")");
            epoch_loss += lg.loss * static_cast<double>(end - start);
            ++step;

            auto adam = [&](double& param, double grad, double& m, double& v, std::size_t t) {
                m = beta1 * m + (1 - beta1) * grad;
                v = beta2 * v + (1 - beta2) * grad * grad;
                double mh = m / (1 - std::pow(beta1, static_cast<double>(t)));
                double vh = v / (1 - std::pow(beta2, static_cast<double>(t)));
                param -= config.learning_rate * mh / (std::sqrt(vh) + eps);
            };
            for (std::size_t k = 0; k < p.weight.size(); ++k)
                adam(p.weight[k], lg.gradient.weight[k], m_head[k], v_head[k], step);
            for (int c = 0; c < 2; ++c)
                adam(p.bias[c], lg.gradient.bias[c], m_head[p.weight.size() + c], v_head[p.weight.size() + c], step);
            std::set<std::size_t> rows;
            for (const auto& b : batch_ids)
                for (auto id : b)
                    if (id != 0) rows.insert(id);
            for (auto r : rows) {
                ++row_steps[r];
                for (std::size_t k = 0; k < w; ++k) {
                    std::size_t i = r * w + k;
                    adam(p.embedding[i], lg.gradient.embedding[i], m_emb[i], v_emb[i], row_steps[r]);
                }
            }
        }
        model.training_log.push_back(epoch_loss / static_cast<double>(corpus.size()));
    }
    return model;
}

std::array<double, 2> class_probabilities(const TrainedModel& model, std::span<const std::string> tokens) {
    auto ids = model.encode(tokens);
    std::size_t known = 0;
    auto h = pool(model.params, ids, known);
    return softmax_head(model.params, h);
}

std::vector<PredictionScore> predict(const TrainedModel& model, std::span<const LabeledExample> examples) {
    std::vector<PredictionScore> out;
    out.reserve(examples.size());
    for (const auto& e : examples) {
        double s = class_probabilities(model, e.tokens)[1];
        out.push_back({e.chain_id, s, s >= model.config.threshold ? 1 : 0});
    }
    return out;
}

std::string model_to_json(const TrainedModel& model) {
    Json j;
    const auto& c = model.config;
    j["config"] = {{"kind", c.kind == ClassifierKind::NativeBaseline ? "native_baseline" : "external"},
                   {"name", c.name},
                   {"sequence_cap", c.sequence_cap},
                   {"embedding_width", c.embedding_width},
                   {"epochs", c.epochs},
                   {"batch_size", c.batch_size},
                   {"learning_rate", c.learning_rate},
                   {"seed", c.seed},
                   {"threshold", c.threshold}};
    j["vocabulary"] = model.vocabulary;
    j["embedding"] = model.params.embedding;
    j["weight"] = model.params.weight;
    j["bias"] = model.params.bias;
    j["training_log"] = model.training_log;
    return j.dump() + "\n";
}

TrainedModel model_from_json(std::string_view text) {
    try {
        Json j = Json::parse(text);
        const auto& jc = j.at("config");
        ClassifierConfig c;
        c.kind = jc.at("kind") == "external" ? ClassifierKind::External : ClassifierKind::NativeBaseline;
        c.name = jc.at("name").get<std::string>();
        c.sequence_cap = jc.at("sequence_cap").get<std::size_t>();
        c.embedding_width = jc.at("embedding_width").get<std::size_t>();
        c.epochs = jc.at("epochs").get<int>();
        c.batch_size = jc.at("batch_size").get<std::size_t>();
        c.learning_rate = jc.at("learning_rate").get<double>();
        c.seed = jc.at("seed").get<std::uint64_t>();
        c.threshold = jc.at("threshold").get<double>();
        TrainedModel m = empty_model(c, j.at("vocabulary").get<std::vector<std::string>>());
        m.params.embedding = j.at("embedding").get<std::vector<double>>();
        m.params.weight = j.at("weight").get<std::vector<double>>();
        m.params.bias = j.at("bias").get<std::array<double, 2>>();
        m.training_log = j.at("training_log").get<std::vector<double>>();
        if (m.params.embedding.size() != m.vocabulary.size() * c.embedding_width ||
            m.params.weight.size() != 2 * c.embedding_width)
            throw Error("parameter shapes do not match the vocabulary and width");
        return m;
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
}

std::string scores_to_jsonl(std::span<const PredictionScore> scores, std::string_view model_name) {
    std::vector<Json> records;
    records.reserve(scores.size());
    for (const auto& s : scores) {
        Json j;
        j["chain_id"] = s.chain_id;
        j["score"] = s.score;
        j["model"] = model_name;
        records.push_back(std::move(j));
    }
    return to_jsonl(records);
}

ImportedScores parse_scores(std::string_view text, const std::set<std::string>* known_ids, double threshold) {
    ImportedScores out;
    std::map<std::string, std::size_t> position;
    auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            Json j = Json::parse(lines[n]);
            PredictionScore s;
            s.chain_id = j.at("chain_id").get<std::string>();
            s.score = j.at("score").get<double>();
            if (!(s.score >= 0.0 && s.score <= 1.0))
                throw Error("score " + j.at("score").dump() + " outside [0, 1]");
            if (known_ids && !known_ids->count(s.chain_id)) throw Error("unknown chain id '" + s.chain_id + "'");
            s.predicted_label = s.score >= threshold ? 1 : 0;
            if (out.model_name.empty()) out.model_name = j.value("model", "");
            if (auto it = position.find(s.chain_id); it != position.end()) {
                ++out.duplicates;
                out.scores[it->second] = std::move(s);
            } else {
                position.emplace(s.chain_id, out.scores.size());
                out.scores.push_back(std::move(s));
            }
        } catch (const std::exception& e) {
            out.errors.push_back({n + 1, e.what()});
        }
    }
    return out;
}

ImportedScores import_scores(const std::filesystem::path& path, const std::set<std::string>* known_ids,
                             double threshold) {
    return parse_scores(read_file(path), known_ids, threshold);
}

}  // namespace awi
