#include "awi/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "awi/jsonl.hpp"

namespace awi {

std::string_view to_string(ContextVariant v) {
    switch (v) {
        case ContextVariant::RawMethod: return "raw_method";
        case ContextVariant::Abstracted: return "abstracted";
        case ContextVariant::LineOnly: return "line_only";
    }
    return "raw_method";
}

ContextVariant context_variant_from_string(std::string_view s) {
    if (s == "raw_method") return ContextVariant::RawMethod;
    if (s == "abstracted") return ContextVariant::Abstracted;
    if (s == "line_only") return ContextVariant::LineOnly;
    throw Error("unknown context variant '" + std::string(s) + "'");
}

std::string_view to_string(ScenarioVariant v) {
    switch (v) {
        case ScenarioVariant::Within1: return "within1";
        case ScenarioVariant::Within2: return "within2";
        case ScenarioVariant::Cross1: return "cross1";
        case ScenarioVariant::Cross2: return "cross2";
    }
    return "within1";
}

ScenarioVariant scenario_variant_from_string(std::string_view s) {
    if (s == "within1") return ScenarioVariant::Within1;
    if (s == "within2") return ScenarioVariant::Within2;
    if (s == "cross1") return ScenarioVariant::Cross1;
    if (s == "cross2") return ScenarioVariant::Cross2;
    throw Error("unknown scenario variant '" + std::string(s) + "'");
}

int label_value(LabelKind k) {
    if (k == LabelKind::Actionable) return 1;
    if (k == LabelKind::Unactionable) return 0;
    throw Error("unknown labels never enter datasets");
}

void SplitRatios::validate() const {
    if (train < 0 || validation < 0 || test < 0) throw Error("split ratios must be non-negative");
    if (std::abs(train + validation + test - 1.0) > 1e-9)
        throw Error("split ratios must sum to 1 (got " + std::to_string(train + validation + test) + ")");
}

SplitRatios SplitRatios::parse(std::string_view text) {
    std::vector<double> parts;
    std::string s(text);
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, '/')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw Error("");
        } catch (const std::exception&) {
            throw Error("invalid ratio '" + item + "' in '" + s + "'");
        }
    }
    if (parts.size() != 3) throw Error("ratios must have the form a/b/c, got '" + s + "'");
    SplitRatios r{parts[0], parts[1], parts[2]};
    r.validate();
    return r;
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw Error("uniform_index over an empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

namespace {

void sort_by_chain(std::vector<LabeledExample>& v) {
    std::sort(v.begin(), v.end(),
              [](const LabeledExample& a, const LabeledExample& b) { return a.chain_id < b.chain_id; });
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].chain_id == v[i - 1].chain_id) throw Error("duplicate chain id '" + v[i].chain_id + "' in dataset");
}

// Part sizes {train, validation, test} for one class of size n.
std::array<std::size_t, 3> part_sizes(std::size_t n, const SplitRatios& r, LabelKind cls) {
    const double ratio[3] = {r.train, r.validation, r.test};
    std::size_t nonzero = 0;
    for (double x : ratio) nonzero += x > 0 ? 1 : 0;
    if (n < nonzero)
        throw Error("stratification infeasible: class " + std::string(to_string(cls)) + " has " +
                    std::to_string(n) + " example(s) for " + std::to_string(nonzero) + " nonzero part(s)");
    std::array<std::size_t, 3> size{0, 0, 0};
    for (int p = 0; p < 3; ++p)
        if (ratio[p] > 0)
            size[p] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio[p] * static_cast<double>(n))));
    // The remainder goes to train, or to the first nonzero part when train has no share.
    const int sink = ratio[0] > 0 ? 0 : (ratio[1] > 0 ? 1 : 2);
    auto rest = [&] {
        std::size_t sum = 0;
        for (int p = 0; p < 3; ++p)
            if (p != sink) sum += size[p];
        return sum;
    };
    while (rest() + 1 > n) {
        int largest = -1;
        for (int p = 0; p < 3; ++p)
            if (p != sink && size[p] > 1 && (largest < 0 || size[p] > size[largest])) largest = p;
        if (largest < 0) break;
        --size[largest];
    }
    size[sink] = n - rest();
    return size;
}

}  // namespace

DatasetSplit stratified_split(std::vector<LabeledExample> examples, const SplitRatios& ratios,
                              std::uint64_t seed) {
    ratios.validate();
    sort_by_chain(examples);
    DatasetSplit split;
    split.seed = seed;
    split.ratios = ratios;
    for (const auto& e : examples)
        if (e.label == LabelKind::Unknown) throw Error("example " + e.chain_id + " has an unknown label");
    std::mt19937_64 rng(seed);
    for (LabelKind cls : {LabelKind::Actionable, LabelKind::Unactionable}) {
        std::vector<LabeledExample> members;
        for (auto& e : examples)
            if (e.label == cls) members.push_back(std::move(e));
        auto size = part_sizes(members.size(), ratios, cls);
        seeded_shuffle(members, rng);
        auto it = std::make_move_iterator(members.begin());
        split.train.insert(split.train.end(), it, it + size[0]);
        it += size[0];
        split.validation.insert(split.validation.end(), it, it + size[1]);
        it += size[1];
        split.test.insert(split.test.end(), it, it + size[2]);
    }
    return split;
}

std::vector<ScenarioSpec> build_scenarios(const std::vector<LabeledExample>& examples, std::uint64_t seed) {
    std::map<std::string, std::vector<LabeledExample>> by_project;
    for (const auto& e : examples) by_project[e.project].push_back(e);
    if (by_project.size() < 2) throw Error("scenarios need at least 2 projects");

    const SplitRatios halves{0.5, 0.0, 0.5};
    std::map<std::string, DatasetSplit> halves_of;
    for (auto& [project, members] : by_project) {
        try {
            halves_of.emplace(project, stratified_split(members, halves, seed ^ fnv1a64(project)));
        } catch (const Error& e) {
            throw Error("project " + project + ": " + e.what());
        }
    }

    std::vector<ScenarioSpec> out;
    for (const auto& [project, split] : halves_of) {
        std::vector<LabeledExample> others;
        for (const auto& [other, members] : by_project)
            if (other != project) others.insert(others.end(), members.begin(), members.end());
        for (auto v : {ScenarioVariant::Within1, ScenarioVariant::Within2, ScenarioVariant::Cross1,
                       ScenarioVariant::Cross2}) {
            ScenarioSpec s;
            s.variant = v;
            s.held_out_project = project;
            s.test = split.test;
            if (v == ScenarioVariant::Within1 || v == ScenarioVariant::Cross1) s.train = others;
            if (v == ScenarioVariant::Within1 || v == ScenarioVariant::Within2)
                s.train.insert(s.train.end(), split.train.begin(), split.train.end());
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<std::vector<LabeledExample>> finetune_ladder(std::vector<LabeledExample> train,
                                                         std::span<const double> fractions,
                                                         std::uint64_t seed) {
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (fractions[i] < 0 || fractions[i] > 1) throw Error("ladder fractions must lie in [0, 1]");
        if (i > 0 && fractions[i] < fractions[i - 1]) throw Error("ladder fractions must be sorted");
    }
    sort_by_chain(train);
    std::mt19937_64 rng(seed);
    seeded_shuffle(train, rng);
    std::vector<std::vector<LabeledExample>> out;
    for (double f : fractions) {
        auto n = static_cast<std::size_t>(std::llround(f * static_cast<double>(train.size())));
        out.emplace_back(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(std::min(n, train.size())));
    }
    return out;
}

std::string corpus_to_jsonl(std::span<const LabeledExample> examples, std::string_view split) {
    std::vector<Json> records;
    records.reserve(examples.size());
    for (const auto& e : examples) {
        Json j;
        j["chain_id"] = e.chain_id;
        j["project"] = e.project;
        j["label"] = label_value(e.label);
        j["variant"] = to_string(e.variant);
        j["warning_type"] = e.warning_type;
        j["category"] = e.category;
        if (!split.empty()) j["split"] = split;
        std::string text;
        for (const auto& t : e.tokens) {
            if (!text.empty()) text.push_back(' ');
            text += t;
        }
        j["text"] = std::move(text);
        j["tokens"] = e.tokens;
        records.push_back(std::move(j));
    }
    return to_jsonl(records);
}

std::vector<LabeledExample> corpus_from_jsonl(std::string_view text) {
    std::vector<LabeledExample> out;
    auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        try {
            Json j = Json::parse(lines[n]);
            LabeledExample e;
            e.chain_id = j.at("chain_id").get<std::string>();
            e.project = j.value("project", "");
            int label = j.at("label").get<int>();
            if (label != 0 && label != 1) throw Error("label must be 0 or 1");
            e.label = label == 1 ? LabelKind::Actionable : LabelKind::Unactionable;
            e.variant = context_variant_from_string(j.value("variant", "raw_method"));
            e.warning_type = j.value("warning_type", "");
            e.category = j.value("category", "");
            if (j.contains("tokens")) {
                e.tokens = j.at("tokens").get<std::vector<std::string>>();
            } else {
                std::istringstream ss(j.at("text").get<std::string>());
                for (std::string t; ss >> t;) e.tokens.push_back(t);
            }
            out.push_back(std::move(e));
        } catch (const std::exception& e) {
            throw Error("corpus line " + std::to_string(n + 1) + ": " + e.what());
        }
    }
    return out;
}

std::size_t export_corpus(std::span<const LabeledExample> examples, const std::filesystem::path& path,
                          std::string_view split) {
    write_file(path, corpus_to_jsonl(examples, split));
    return examples.size();
}

std::vector<LabeledExample> import_corpus(const std::filesystem::path& path) {
    return corpus_from_jsonl(read_file(path));
}

}  // namespace awi
