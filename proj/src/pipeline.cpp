#include "awi/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "awi/context.hpp"
#include "awi/evaluation.hpp"
#include "awi/ingest.hpp"
#include "awi/labeling.hpp"
#include "awi/parallel.hpp"
#include "awi/tracking.hpp"

namespace fs = std::filesystem;

namespace awi {

// ---------------------------------------------------------------------------------------------
// Configuration

ContextVariant PipelineConfig::variant() const {
    if (abstract) return ContextVariant::Abstracted;
    return method_context ? ContextVariant::RawMethod : ContextVariant::LineOnly;
}

void PipelineConfig::validate() const {
    if (manifests.empty()) throw Error("config: no manifest given");
    if (out.empty()) throw Error("config: no output directory given");
    ratios.validate();
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (fractions[i] < 0 || fractions[i] > 1) throw Error("config: fractions must lie in [0, 1]");
        if (i > 0 && fractions[i] < fractions[i - 1]) throw Error("config: fractions must be sorted");
    }
    if (window < 0) throw Error("config: window must be non-negative");
    if (line_tolerance < 0) throw Error("config: line tolerance must be non-negative");
    if (cap == 0) throw Error("config: sequence cap must be positive");
    classifier.validate();
    if (classifier.sequence_cap != cap)
        throw Error("config: classifier sequence cap " + std::to_string(classifier.sequence_cap) +
                    " differs from the context cap " + std::to_string(cap));
    auto canon = [](const fs::path& p) { return fs::weakly_canonical(fs::absolute(p)); };
    const auto o = canon(out);
    std::vector<fs::path> inputs;
    for (const auto& m : manifests) inputs.push_back(m);
    if (reviews) inputs.push_back(*reviews);
    for (const auto& e : external_scores) inputs.push_back(e.path);
    for (const auto& in : inputs) {
        auto c = canon(in);
        if (c == o || c.parent_path() == o)
            throw Error("config: output directory must be distinct from input '" + in.string() + "'");
    }
    std::set<std::string> names{classifier.name};
    for (const auto& e : external_scores)
        if (!names.insert(e.name).second) throw Error("config: duplicate model name '" + e.name + "'");
}

std::vector<ScenarioVariant> parse_scenario_list(std::string_view text) {
    if (text == "none" || text.empty()) return {};
    if (text == "all")
        return {ScenarioVariant::Within1, ScenarioVariant::Within2, ScenarioVariant::Cross1, ScenarioVariant::Cross2};
    std::vector<ScenarioVariant> out;
    std::stringstream ss{std::string(text)};
    for (std::string item; std::getline(ss, item, ',');) {
        auto v = scenario_variant_from_string(item);
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> parse_fraction_list(std::string_view text) {
    std::vector<double> out;
    std::stringstream ss{std::string(text)};
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw Error("");
        } catch (const std::exception&) {
            throw Error("invalid fraction '" + item + "'");
        }
    }
    return out;
}

namespace {

bool truthy(const Json& j) {
    if (j.is_boolean()) return j.get<bool>();
    auto s = j.get<std::string>();
    if (s == "on" || s == "true") return true;
    if (s == "off" || s == "false") return false;
    throw Error("expected on/off, got '" + s + "'");
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& doc, const fs::path& base_dir) {
    PipelineConfig c;
    try {
        if (doc.contains("manifest")) c.manifests.push_back(resolve_path(base_dir, doc.at("manifest").get<std::string>()));
        if (doc.contains("manifests"))
            for (const auto& m : doc.at("manifests")) c.manifests.push_back(resolve_path(base_dir, m.get<std::string>()));
        if (doc.contains("reviews") && !doc.at("reviews").is_null())
            c.reviews = resolve_path(base_dir, doc.at("reviews").get<std::string>());
        if (doc.contains("out")) c.out = resolve_path(base_dir, doc.at("out").get<std::string>());
        if (doc.contains("context")) {
            auto ctx = doc.at("context").get<std::string>();
            if (ctx != "method" && ctx != "line") throw Error("context must be 'method' or 'line'");
            c.method_context = ctx == "method";
        }
        if (doc.contains("abstract")) c.abstract = truthy(doc.at("abstract"));
        c.window = doc.value("window", c.window);
        c.cap = doc.value("cap", c.cap);
        c.line_tolerance = doc.value("line_tolerance", c.line_tolerance);
        c.seed = doc.value("seed", c.seed);
        c.jobs = doc.value("jobs", c.jobs);
        if (doc.contains("ratios")) {
            const auto& r = doc.at("ratios");
            if (r.is_string()) {
                c.ratios = SplitRatios::parse(r.get<std::string>());
            } else {
                auto v = r.get<std::vector<double>>();
                if (v.size() != 3) throw Error("ratios must have three parts");
                c.ratios = {v[0], v[1], v[2]};
            }
        }
        if (doc.contains("fractions")) c.fractions = doc.at("fractions").get<std::vector<double>>();
        if (doc.contains("scenarios")) {
            const auto& s = doc.at("scenarios");
            if (s.is_string()) {
                c.scenarios = parse_scenario_list(s.get<std::string>());
            } else {
                std::string joined;
                for (const auto& v : s) joined += (joined.empty() ? "" : ",") + v.get<std::string>();
                c.scenarios = parse_scenario_list(joined);
            }
        }
        c.classifier.seed = c.seed;
        c.classifier.sequence_cap = c.cap;
        if (doc.contains("classifier")) {
            const auto& k = doc.at("classifier");
            c.classifier.name = k.value("name", c.classifier.name);
            c.classifier.embedding_width = k.value("embedding_width", c.classifier.embedding_width);
            c.classifier.epochs = k.value("epochs", c.classifier.epochs);
            c.classifier.batch_size = k.value("batch_size", c.classifier.batch_size);
            c.classifier.learning_rate = k.value("learning_rate", c.classifier.learning_rate);
            c.classifier.seed = k.value("seed", c.classifier.seed);
            c.classifier.threshold = k.value("threshold", c.classifier.threshold);
            c.classifier.sequence_cap = k.value("sequence_cap", c.classifier.sequence_cap);
        }
        if (doc.contains("external_scores"))
            for (const auto& e : doc.at("external_scores"))
                c.external_scores.push_back(
                    {e.at("name").get<std::string>(), resolve_path(base_dir, e.at("path").get<std::string>())});
    } catch (const Json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw Error("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return from_json(doc, path.parent_path());
}

Json PipelineConfig::to_json() const {
    Json j;
    Json m = Json::array();
    for (const auto& p : manifests) m.push_back(p.string());
    j["manifests"] = m;
    j["reviews"] = reviews ? Json(reviews->string()) : Json(nullptr);
    j["out"] = out.string();
    j["context"] = method_context ? "method" : "line";
    j["abstract"] = abstract;
    j["window"] = window;
    j["cap"] = cap;
    j["line_tolerance"] = line_tolerance;
    j["ratios"] = {ratios.train, ratios.validation, ratios.test};
    j["seed"] = seed;
    Json s = Json::array();
    for (auto v : scenarios) s.push_back(to_string(v));
    j["scenarios"] = s;
    j["fractions"] = fractions;
    j["classifier"] = {{"name", classifier.name},
                       {"embedding_width", classifier.embedding_width},
                       {"epochs", classifier.epochs},
                       {"batch_size", classifier.batch_size},
                       {"learning_rate", classifier.learning_rate},
                       {"seed", classifier.seed},
                       {"threshold", classifier.threshold},
                       {"sequence_cap", classifier.sequence_cap}};
    Json ext = Json::array();
    for (const auto& e : external_scores) ext.push_back({{"name", e.name}, {"path", e.path.string()}});
    j["external_scores"] = ext;
    j["jobs"] = jobs;
    return j;
}

std::string PipelineConfig::digest() const {
    Json j = to_json();
    j.erase("out");
    j.erase("jobs");
    return hex64(fnv1a64(j.dump()));
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Ingest: return "ingest";
        case Stage::Track: return "track";
        case Stage::Label: return "label";
        case Stage::Context: return "context";
        case Stage::Split: return "split";
        case Stage::Scenarios: return "scenarios";
        case Stage::Train: return "train";
        case Stage::ImportScores: return "import-scores";
        case Stage::Eval: return "eval";
        case Stage::Report: return "report";
    }
    return "ingest";
}

std::optional<Stage> stage_from_string(std::string_view s) {
    for (auto st : {Stage::Ingest, Stage::Track, Stage::Label, Stage::Context, Stage::Split, Stage::Scenarios,
                    Stage::Train, Stage::ImportScores, Stage::Eval, Stage::Report})
        if (to_string(st) == s) return st;
    return std::nullopt;
}

// ---------------------------------------------------------------------------------------------
// Artifact layout and stored forms

namespace {

struct Layout {
    fs::path out;

    fs::path project(const std::string& p) const { return out / "projects" / p; }
    fs::path series(const std::string& p) const { return project(p) / "series.json"; }
    fs::path snapshot(const std::string& p, std::size_t ordinal) const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04zu.jsonl", ordinal);
        return project(p) / "snapshots" / buf;
    }
    fs::path chains(const std::string& p) const { return project(p) / "chains.jsonl"; }
    fs::path labels(const std::string& p) const { return project(p) / "labels.jsonl"; }
    fs::path contexts(const std::string& p) const { return project(p) / "contexts.jsonl"; }
    fs::path corpus(const std::string& part) const { return out / "corpora" / (part + ".jsonl"); }
    fs::path rung_name(double f) const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "rung_%03d", static_cast<int>(std::lround(f * 100)));
        return buf;
    }
    fs::path scenario_dir(ScenarioVariant v, const std::string& p) const {
        return out / "scenarios" / std::string(to_string(v)) / p;
    }
};

std::vector<std::string> project_names(const PipelineConfig& config) {
    std::vector<std::string> names;
    for (const auto& m : config.manifests) {
        auto name = load_manifest(m).project;
        if (std::find(names.begin(), names.end(), name) != names.end())
            throw Error("two manifests describe project '" + name + "'");
        names.push_back(std::move(name));
    }
    return names;
}

struct StoredSeries {
    CommitSeries series;
    std::vector<WarningSnapshot> snapshots;
    SourceSet sources;
};

void write_series(const Layout& layout, const SeriesManifest& manifest, const LoadedSeries& loaded) {
    const auto& p = manifest.project;
    Json j;
    j["project"] = p;
    j["synthesized_timestamps"] = loaded.series.synthesized_timestamps;
    j["source_roots"] = manifest.source_roots;
    Json commits = Json::array();
    for (const auto& c : loaded.series.commits) {
        auto src = loaded.sources.find(c.ordinal);
        commits.push_back({{"id", c.id},
                           {"timestamp", format_timestamp(c.timestamp)},
                           {"ordinal", c.ordinal},
                           {"compilable", c.compilable},
                           {"source", src == loaded.sources.end() ? Json(nullptr) : Json(src->second.string())}});
    }
    j["commits"] = std::move(commits);
    Json errors = Json::array();
    for (const auto& e : loaded.entry_errors) errors.push_back({{"commit", e.commit_id}, {"error", e.message}});
    j["entry_errors"] = std::move(errors);
    j["notes"] = loaded.notes;
    std::size_t total = 0;
    for (const auto& s : loaded.snapshots) total += s.size();
    j["warning_occurrences"] = total;
    write_file(layout.series(p), j.dump(2) + "\n");
    for (const auto& s : loaded.snapshots)
        write_file(layout.snapshot(p, s.commit().ordinal), export_normalized_report(s.warnings()));
}

StoredSeries read_series(const Layout& layout, const std::string& project) {
    StoredSeries out;
    Json j = Json::parse(read_file(layout.series(project)));
    out.series.project = j.at("project").get<std::string>();
    out.series.synthesized_timestamps = j.at("synthesized_timestamps").get<bool>();
    auto roots = j.at("source_roots").get<std::vector<std::string>>();
    for (const auto& c : j.at("commits")) {
        CommitRef ref;
        ref.id = c.at("id").get<std::string>();
        ref.timestamp = parse_timestamp(c.at("timestamp").get<std::string>());
        ref.ordinal = c.at("ordinal").get<std::size_t>();
        ref.compilable = c.at("compilable").get<bool>();
        if (!c.at("source").is_null())
            out.sources.emplace(ref.ordinal, SourceTree::from_directory(c.at("source").get<std::string>(), roots));
        out.series.commits.push_back(std::move(ref));
    }
    for (const auto& c : out.series.commits) {
        if (!c.compilable) continue;
        auto parsed = parse_normalized_report(read_file(layout.snapshot(project, c.ordinal)), c);
        if (!parsed.errors.empty())
            throw Error("stored snapshot " + layout.snapshot(project, c.ordinal).string() + " line " +
                        std::to_string(parsed.errors.front().line) + ": " + parsed.errors.front().message);
        out.snapshots.emplace_back(c, std::move(parsed.warnings));
    }
    return out;
}

struct ContextRecord {
    std::string chain_id;
    std::string warning_type;
    std::string category;
    ContextScope scope = ContextScope::Unavailable;
    std::vector<std::string> tokens;
};

std::vector<ContextRecord> read_contexts(const fs::path& path) {
    std::vector<ContextRecord> out;
    const auto text = read_file(path);
    for (auto line : split_lines(text)) {
        if (line.empty()) continue;
        Json j = Json::parse(line);
        out.push_back({j.at("chain_id").get<std::string>(), j.at("warning_type").get<std::string>(),
                       j.at("category").get<std::string>(), context_scope_from_string(j.at("scope").get<std::string>()),
                       j.at("tokens").get<std::vector<std::string>>()});
    }
    return out;
}

std::map<std::string, LabelKind> label_map(std::span<const LabeledExample> examples) {
    std::map<std::string, LabelKind> m;
    for (const auto& e : examples) m.emplace(e.chain_id, e.label);
    return m;
}

std::vector<fs::path> sorted_files(const fs::path& dir, std::string_view ext) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<fs::path> sorted_dirs(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------------------------
// Stages

void stage_ingest(const PipelineConfig& config, const Layout& layout) {
    for (const auto& path : config.manifests) {
        auto manifest = load_manifest(path);
        auto loaded = load_series(manifest, config.jobs);
        write_series(layout, manifest, loaded);
    }
}

void stage_track(const PipelineConfig& config, const Layout& layout) {
    TrackingOptions options;
    options.line_tolerance = config.line_tolerance;
    for (const auto& p : project_names(config)) {
        auto stored = read_series(layout, p);
        auto chains = track_series(stored.series, stored.snapshots, stored.sources, options);
        write_file(layout.chains(p), chains_to_jsonl(chains, stored.series));
    }
}

void stage_label(const PipelineConfig& config, const Layout& layout) {
    auto projects = project_names(config);
    std::vector<ReviewDecision> reviews;
    if (config.reviews) reviews = reviews_from_jsonl(read_file(*config.reviews));
    std::map<std::string, std::vector<ReviewDecision>> per_project;
    std::vector<std::string> orphans;
    for (auto& r : reviews) {
        auto colon = r.chain_id.find(':');
        std::string project = colon == std::string::npos ? "" : r.chain_id.substr(0, colon);
        if (std::find(projects.begin(), projects.end(), project) == projects.end())
            orphans.push_back(r.chain_id);
        else
            per_project[project].push_back(std::move(r));
    }
    if (!orphans.empty()) {
        std::string ids;
        for (const auto& id : orphans) ids += " " + id;
        throw Error("reviews reference unknown chain ids:" + ids);
    }
    for (const auto& p : projects) {
        auto stored = read_series(layout, p);
        auto chains = chains_from_jsonl(read_file(layout.chains(p)), stored.series);
        auto result = finalize_labels(chains, per_project[p], stored.series);
        write_file(layout.labels(p), labels_to_jsonl(result.labels));
        write_file(layout.project(p) / "review_queue.jsonl", review_queue_to_jsonl(chains));
        std::map<std::string, std::size_t> counts;
        for (const auto& l : result.labels)
            counts[std::string(to_string(l.kind)) + "/" + std::string(to_string(l.provenance))]++;
        Json summary;
        summary["median_actionable_lifetime_seconds"] = result.median ? Json(result.median->count()) : Json(nullptr);
        summary["counts"] = counts;
        summary["notes"] = result.notes;
        write_file(layout.project(p) / "label_summary.json", summary.dump(2) + "\n");
    }
}

void stage_context(const PipelineConfig& config, const Layout& layout) {
    ContextOptions options;
    options.method_granularity = config.method_context;
    options.window = config.window;
    for (const auto& p : project_names(config)) {
        auto stored = read_series(layout, p);
        auto chains = chains_from_jsonl(read_file(layout.chains(p)), stored.series);
        std::vector<Json> records(chains.size());
        parallel_for(chains.size(), config.jobs, [&](std::size_t i) {
            const auto& ch = chains[i];
            const auto& w = ch.last_warning();
            auto src = stored.sources.find(w.commit.ordinal);
            auto raw = extract_context(w, src == stored.sources.end() ? nullptr : &src->second, options);
            Json r;
            r["chain_id"] = ch.id;
            r["warning_type"] = w.type;
            r["category"] = w.category;
            r["scope"] = to_string(raw.scope);
            r["method_signature"] = raw.method_signature ? Json(*raw.method_signature) : Json(nullptr);
            r["raw_text"] = raw.source_text;
            r["variant"] = to_string(config.variant());
            std::vector<std::string> tokens;
            bool truncated = false;
            if (raw.scope != ContextScope::Unavailable) {
                if (config.abstract) {
                    auto abs = abstract_context(raw, {true, config.cap});
                    tokens = abs.tokens.texts();
                    truncated = abs.tokens.truncated;
                    r["abstracted_text"] = abs.tokens.rendered();
                    if (!abs.typed) raw.flags.emplace_back("lexical kinds only");
                } else {
                    auto seq = tokenize(raw.source_text, config.cap);
                    tokens = seq.texts();
                    truncated = seq.truncated;
                    if (seq.lexical_errors) raw.flags.emplace_back("lexical errors");
                }
            }
            if (!r.contains("abstracted_text")) r["abstracted_text"] = nullptr;
            r["truncated"] = truncated;
            r["tokens"] = std::move(tokens);
            r["flags"] = raw.flags;
            records[i] = std::move(r);
        });
        write_file(layout.contexts(p), to_jsonl(records));
    }
}

std::vector<LabeledExample> collect_examples(const PipelineConfig& config, const Layout& layout) {
    std::vector<LabeledExample> examples;
    for (const auto& p : project_names(config)) {
        std::map<std::string, LabelKind> labels;
        for (const auto& l : labels_from_jsonl(read_file(layout.labels(p))))
            if (l.labeled()) labels.emplace(l.chain_id, l.kind);
        for (auto& c : read_contexts(layout.contexts(p))) {
            auto it = labels.find(c.chain_id);
            if (it == labels.end() || c.scope == ContextScope::Unavailable || c.tokens.empty()) continue;
            examples.push_back(
                {c.chain_id, p, c.warning_type, c.category, config.variant(), std::move(c.tokens), it->second});
        }
    }
    return examples;
}

void stage_split(const PipelineConfig& config, const Layout& layout) {
    auto examples = collect_examples(config, layout);
    auto split = stratified_split(examples, config.ratios, config.seed);
    export_corpus(split.train, layout.corpus("train"), "train");
    export_corpus(split.validation, layout.corpus("validation"), "validation");
    export_corpus(split.test, layout.corpus("test"), "test");
    if (!config.fractions.empty()) {
        auto ladder = finetune_ladder(split.train, config.fractions, config.seed);
        for (std::size_t i = 0; i < ladder.size(); ++i)
            export_corpus(ladder[i], layout.out / "corpora" / "ladder" / (layout.rung_name(config.fractions[i]).string() + ".jsonl"),
                          "train");
    }
    auto count = [](const std::vector<LabeledExample>& v) {
        std::size_t pos = 0;
        for (const auto& e : v) pos += e.label == LabelKind::Actionable;
        return Json{{"total", v.size()}, {"actionable", pos}, {"unactionable", v.size() - pos}};
    };
    Json summary{{"seed", config.seed},
                 {"ratios", {config.ratios.train, config.ratios.validation, config.ratios.test}},
                 {"examples", count(examples)},
                 {"train", count(split.train)},
                 {"validation", count(split.validation)},
                 {"test", count(split.test)}};
    write_file(layout.out / "corpora" / "summary.json", summary.dump(2) + "\n");
}

void stage_scenarios(const PipelineConfig& config, const Layout& layout) {
    if (config.scenarios.empty()) throw Error("scenario mode is off (no --scenario given)");
    auto scenarios = build_scenarios(collect_examples(config, layout), config.seed);
    Json manifest = Json::array();
    for (const auto& s : scenarios) {
        if (std::find(config.scenarios.begin(), config.scenarios.end(), s.variant) == config.scenarios.end()) continue;
        auto dir = layout.scenario_dir(s.variant, s.held_out_project);
        export_corpus(s.train, dir / "train.jsonl", "train");
        export_corpus(s.test, dir / "test.jsonl", "test");
        manifest.push_back({{"variant", to_string(s.variant)},
                            {"project", s.held_out_project},
                            {"seed", config.seed},
                            {"train", fs::relative(dir / "train.jsonl", layout.out).string()},
                            {"test", fs::relative(dir / "test.jsonl", layout.out).string()},
                            {"train_size", s.train.size()},
                            {"test_size", s.test.size()}});
    }
    write_file(layout.out / "scenarios" / "manifest.json", manifest.dump(2) + "\n");
}

// Trains on `corpus`, falling back to an unfitted model when the corpus is empty or single-class.
TrainedModel fit_or_fallback(const ClassifierConfig& config, const std::vector<LabeledExample>& corpus,
                             std::string& note) {
    bool has[2] = {false, false};
    for (const auto& e : corpus) has[label_value(e.label)] = true;
    if (corpus.empty()) {
        note = "empty training corpus: unfitted model";
        return untrained_model(config);
    }
    if (!has[0] || !has[1]) {
        note = "single-class training corpus: unfitted model";
        return untrained_model(config);
    }
    return train(config, corpus);
}

void stage_train(const PipelineConfig& config, const Layout& layout) {
    const auto& cc = config.classifier;
    Json summary = Json::array();
    auto score_into = [&](const TrainedModel& model, const fs::path& test_corpus, const fs::path& score_path,
                          const fs::path& model_path, std::size_t train_size, const std::string& note) {
        auto test = import_corpus(test_corpus);
        auto scores = predict(model, test);
        write_file(score_path, scores_to_jsonl(scores, cc.name));
        write_file(model_path, model_to_json(model));
        summary.push_back({{"model", fs::relative(model_path, layout.out).string()},
                           {"scores", fs::relative(score_path, layout.out).string()},
                           {"train_size", train_size},
                           {"fitted", note.empty()},
                           {"note", note}});
    };

    auto train_set = import_corpus(layout.corpus("train"));
    score_into(train(cc, train_set), layout.corpus("test"), layout.out / "scores" / "split" / (cc.name + ".jsonl"),
               layout.out / "models" / (cc.name + ".json"), train_set.size(), "");

    for (double f : config.fractions) {
        auto rung = layout.rung_name(f).string();
        auto corpus = import_corpus(layout.out / "corpora" / "ladder" / (rung + ".jsonl"));
        std::string note;
        auto model = fit_or_fallback(cc, corpus, note);
        score_into(model, layout.corpus("test"), layout.out / "scores" / "ladder" / rung / (cc.name + ".jsonl"),
                   layout.out / "models" / "ladder" / rung / (cc.name + ".json"), corpus.size(), note);
    }

    for (auto v : config.scenarios) {
        for (const auto& dir : sorted_dirs(layout.out / "scenarios" / std::string(to_string(v)))) {
            auto project = dir.filename().string();
            auto corpus = import_corpus(dir / "train.jsonl");
            std::string note;
            auto model = fit_or_fallback(cc, corpus, note);
            auto rel = fs::path(std::string(to_string(v))) / project;
            score_into(model, dir / "test.jsonl", layout.out / "scores" / "scenarios" / rel / (cc.name + ".jsonl"),
                       layout.out / "models" / "scenarios" / rel / (cc.name + ".json"), corpus.size(), note);
        }
    }
    write_file(layout.out / "models" / "summary.json", summary.dump(2) + "\n");
}

void stage_import_scores(const PipelineConfig& config, const Layout& layout) {
    if (config.external_scores.empty()) throw Error("no external score files configured");
    auto test = import_corpus(layout.corpus("test"));
    std::set<std::string> ids;
    for (const auto& e : test) ids.insert(e.chain_id);
    for (const auto& ext : config.external_scores) {
        auto imported = import_scores(ext.path, &ids, config.classifier.threshold);
        if (imported.scores.empty())
            throw Error("score file '" + ext.path.string() + "' has no valid record (" +
                        std::to_string(imported.errors.size()) + " record error(s))");
        write_file(layout.out / "scores" / "split" / (ext.name + ".jsonl"), scores_to_jsonl(imported.scores, ext.name));
        Json errors = Json::array();
        for (const auto& e : imported.errors) errors.push_back({{"line", e.line}, {"error", e.message}});
        Json log{{"source", ext.path.string()},
                 {"accepted", imported.scores.size()},
                 {"duplicates", imported.duplicates},
                 {"errors", errors}};
        write_file(layout.out / "scores" / "import" / (ext.name + ".json"), log.dump(2) + "\n");
    }
}

Json overlap_to_json(const OverlapReport& o) {
    Json regions = Json::array();
    for (const auto& [mask, count] : o.regions) regions.push_back({{"mask", mask}, {"count", count}});
    return {{"models", o.models}, {"regions", regions}, {"total", o.total}, {"union_correct", o.union_correct},
            {"union_accuracy", o.union_accuracy}};
}

OverlapReport overlap_from_json(const Json& j) {
    OverlapReport o;
    o.models = j.at("models").get<std::vector<std::string>>();
    for (const auto& r : j.at("regions")) o.regions[r.at("mask").get<std::uint32_t>()] = r.at("count").get<std::size_t>();
    o.total = j.at("total").get<std::size_t>();
    o.union_correct = j.at("union_correct").get<std::size_t>();
    o.union_accuracy = j.at("union_accuracy").get<double>();
    return o;
}

void stage_eval(const PipelineConfig& config, const Layout& layout) {
    std::vector<EvalReport> reports;
    const double threshold = config.classifier.threshold;
    auto add = [&](const fs::path& score_file, const std::map<std::string, LabelKind>& labels,
                   const std::string& scenario, const std::string& group) {
        auto imported = import_scores(score_file, nullptr, threshold);
        if (!imported.errors.empty())
            throw Error("score file " + score_file.string() + " line " + std::to_string(imported.errors.front().line) +
                        ": " + imported.errors.front().message);
        auto r = evaluate(imported.scores, labels, score_file.stem().string(), scenario, group);
        r.provenance = {{"seed", std::to_string(config.seed)},
                        {"classifier_seed", std::to_string(config.classifier.seed)},
                        {"config_digest", config.digest()},
                        {"tool", std::string(kToolVersion)}};
        reports.push_back(std::move(r));
        return imported;
    };

    auto test = import_corpus(layout.corpus("test"));
    auto test_labels = label_map(test);
    std::vector<std::pair<std::string, ModelPredictions>> split_predictions;
    for (const auto& f : sorted_files(layout.out / "scores" / "split", ".jsonl")) {
        auto imported = add(f, test_labels, "split/test", "split");
        ModelPredictions preds;
        for (const auto& s : imported.scores) preds[s.chain_id] = s.predicted_label;
        split_predictions.emplace_back(f.stem().string(), std::move(preds));
    }
    for (const auto& rung : sorted_dirs(layout.out / "scores" / "ladder"))
        for (const auto& f : sorted_files(rung, ".jsonl"))
            add(f, test_labels, "ladder/" + rung.filename().string(), "ladder");
    for (const auto& variant : sorted_dirs(layout.out / "scores" / "scenarios")) {
        for (const auto& project : sorted_dirs(variant)) {
            auto scen_test = import_corpus(layout.out / "scenarios" / variant.filename() / project.filename() / "test.jsonl");
            auto labels = label_map(scen_test);
            for (const auto& f : sorted_files(project, ".jsonl"))
                add(f, labels, variant.filename().string() + "/" + project.filename().string(),
                    variant.filename().string());
        }
    }
    write_file(layout.out / "eval" / "evals.json", eval_reports_to_json(reports));

    Json overlaps = Json::array();
    if (split_predictions.size() >= 2) {
        std::map<std::string, int> truth;
        for (const auto& [id, k] : test_labels) truth[id] = label_value(k);
        overlaps.push_back(overlap_to_json(overlap(split_predictions, truth)));
    }
    write_file(layout.out / "eval" / "overlap.json", overlaps.dump(2) + "\n");
}

void stage_report(const PipelineConfig&, const Layout& layout) {
    auto reports = eval_reports_from_json(read_file(layout.out / "eval" / "evals.json"));
    std::vector<OverlapReport> overlaps;
    if (fs::exists(layout.out / "eval" / "overlap.json"))
        for (const auto& j : Json::parse(read_file(layout.out / "eval" / "overlap.json")))
            overlaps.push_back(overlap_from_json(j));
    render_report(reports, layout.out / "reports", overlaps);
}

void write_run_manifest(const PipelineConfig& config, const std::vector<std::string>& completed,
                        const std::string& status, const std::string& failed_stage, const std::string& message) {
    Json j{{"tool", kToolVersion},
           {"config_digest", config.digest()},
           {"config", config.to_json()},
           {"status", status},
           {"completed_stages", completed}};
    if (!failed_stage.empty()) {
        j["failed_stage"] = failed_stage;
        j["message"] = message;
    }
    write_file(config.out / "run_manifest.json", j.dump(2) + "\n");
}

}  // namespace

void run_stage(Stage stage, const PipelineConfig& config) {
    const Layout layout{config.out};
    try {
        switch (stage) {
            case Stage::Ingest: stage_ingest(config, layout); break;
            case Stage::Track: stage_track(config, layout); break;
            case Stage::Label: stage_label(config, layout); break;
            case Stage::Context: stage_context(config, layout); break;
            case Stage::Split: stage_split(config, layout); break;
            case Stage::Scenarios: stage_scenarios(config, layout); break;
            case Stage::Train: stage_train(config, layout); break;
            case Stage::ImportScores: stage_import_scores(config, layout); break;
            case Stage::Eval: stage_eval(config, layout); break;
            case Stage::Report: stage_report(config, layout); break;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(std::string(to_string(stage)), e.what());
    }
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    std::vector<Stage> stages{Stage::Ingest, Stage::Track, Stage::Label, Stage::Context, Stage::Split};
    if (!config.scenarios.empty()) stages.push_back(Stage::Scenarios);
    stages.push_back(Stage::Train);
    if (!config.external_scores.empty()) stages.push_back(Stage::ImportScores);
    stages.push_back(Stage::Eval);
    stages.push_back(Stage::Report);

    std::vector<std::string> completed;
    write_run_manifest(config, completed, "running", "", "");
    for (auto s : stages) {
        try {
            run_stage(s, config);
        } catch (const StageError& e) {
            write_run_manifest(config, completed, "failed", e.stage(), e.what());
            return {false, e.stage(), e.what()};
        }
        completed.emplace_back(to_string(s));
    }
    write_run_manifest(config, completed, "ok", "", "");
    return {};
}

}  // namespace awi
