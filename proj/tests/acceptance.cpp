// Acceptance suite: one PASS/FAIL/SKIP line per criterion; exit status 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "awi/classifier.hpp"
#include "awi/context.hpp"
#include "awi/dataset.hpp"
#include "awi/evaluation.hpp"
#include "awi/labeling.hpp"
#include "awi/pipeline.hpp"
#include "awi/tracking.hpp"
#include "synth.hpp"

using namespace awi;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kAucOracleTolerance = 1e-9;
constexpr double kAucOracleSeconds = 10.0;
constexpr double kTrackingSeconds = 5.0;
constexpr double kBaselineMinAuc = 0.95;
constexpr double kShuffledLow = 0.45;
constexpr double kShuffledHigh = 0.55;
constexpr double kGradientTolerance = 1e-4;
constexpr double kRunSeconds = 60.0;
constexpr std::size_t kDatasetWarnings = 10140;
constexpr std::size_t kDatasetUnactionable = 9666;
constexpr std::size_t kDatasetActionable = 474;

// Classifier settings for the synthetic corpora; the defaults target full-size corpora.
ClassifierConfig synthetic_config(std::uint64_t seed) {
    ClassifierConfig c;
    c.embedding_width = 16;
    c.epochs = 10;
    c.learning_rate = 1e-2;
    c.seed = seed;
    return c;
}

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status = Status::Pass;
    std::string detail;
};

struct Checker {
    std::ostringstream failures;
    bool ok = true;
    void expect(bool cond, const std::string& what) {
        if (!cond && ok) failures << what;
        ok = ok && cond;
    }
    Outcome outcome(const std::string& summary) const {
        return {ok ? Status::Pass : Status::Fail, ok ? summary : failures.str()};
    }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double brute_force_auc(const std::vector<ScoredLabel>& v) {
    double wins = 0, pairs = 0;
    for (const auto& p : v)
        for (const auto& n : v) {
            if (p.label != 1 || n.label != 0) continue;
            pairs += 1;
            wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
        }
    return wins / pairs;
}

double model_auc(const TrainedModel& model, const std::vector<LabeledExample>& test) {
    auto scores = predict(model, test);
    std::vector<ScoredLabel> scored;
    for (std::size_t i = 0; i < test.size(); ++i) scored.push_back({scores[i].score, label_value(test[i].label)});
    return auc(scored);
}

Outcome auc_oracle() {
    std::mt19937_64 rng(20240501);
    double worst = 0.0;
    double elapsed = 0.0;
    for (int round = 0; round < 1000; ++round) {
        const std::size_t n = 2 + uniform_index(rng, 199);
        const bool ties = round % 2 == 0;
        std::vector<ScoredLabel> v(n);
        for (auto& s : v) {
            s.score = ties ? static_cast<double>(uniform_index(rng, 10)) / 10.0
                           : static_cast<double>(rng() >> 11) * 0x1.0p-53;
            s.label = static_cast<int>(uniform_index(rng, 2));
        }
        v[0].label = 1;
        v[1].label = 0;
        auto start = Clock::now();
        const double fast = auc(v);
        elapsed += seconds_since(start);
        worst = std::max(worst, std::abs(fast - brute_force_auc(v)));
    }
    Checker c;
    c.expect(worst < kAucOracleTolerance, "max |delta| " + sci(worst));
    c.expect(elapsed < kAucOracleSeconds, "runtime " + fmt(elapsed, 2) + " s");
    return c.outcome("1000 sets, max |delta| " + sci(worst) + ", " + fmt(elapsed, 3) + " s");
}

Outcome auc_examples() {
    std::vector<ScoredLabel> perfect{{0.9, 1}, {0.8, 1}, {0.7, 0}, {0.1, 0}};
    std::vector<ScoredLabel> ties{{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}};
    std::vector<ScoredLabel> four_pairs{{0.9, 1}, {0.4, 1}, {0.6, 0}, {0.1, 0}};
    Checker c;
    c.expect(auc(perfect) == 1.0, "perfect separation gave " + fmt(auc(perfect)));
    c.expect(auc(ties) == 0.5, "all ties gave " + fmt(auc(ties)));
    c.expect(auc(four_pairs) == 0.75, "four-pair case gave " + fmt(auc(four_pairs)));
    return c.outcome("1.0 / 0.5 / 0.75");
}

Outcome tracking_ground_truth() {
    auto s = testing::make_synthetic_series();
    auto start = Clock::now();
    auto chains = track_series(s.series, s.snapshots, s.sources);
    const double elapsed = seconds_since(start);

    using Occurrences = std::set<std::pair<std::size_t, std::string>>;
    std::map<Occurrences, const EvolutionChain*> recovered;
    for (const auto& ch : chains) {
        Occurrences occ;
        for (const auto& w : ch.warnings) occ.emplace(w.commit.ordinal, warning_key(w));
        recovered.emplace(occ, &ch);
    }
    std::size_t matched = 0, label_mismatches = 0;
    for (const auto& p : s.planted) {
        Occurrences occ(p.occurrences.begin(), p.occurrences.end());
        auto it = recovered.find(occ);
        if (it == recovered.end()) continue;
        ++matched;
        if (initial_label(*it->second).kind != p.initial) ++label_mismatches;
    }
    const double precision = chains.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(chains.size());
    const double recall = static_cast<double>(matched) / static_cast<double>(s.planted.size());
    Checker c;
    c.expect(precision == 1.0 && recall == 1.0, "precision " + fmt(precision) + ", recall " + fmt(recall));
    c.expect(label_mismatches == 0, std::to_string(label_mismatches) + " initial label mismatches");
    c.expect(elapsed < kTrackingSeconds, "runtime " + fmt(elapsed, 2) + " s");
    return c.outcome(std::to_string(s.planted.size()) + " chains, precision " + fmt(precision, 2) + ", recall " +
                     fmt(recall, 2) + ", " + fmt(elapsed, 3) + " s");
}

Outcome lifetime_filter() {
    using std::chrono::days;
    CommitSeries s;
    s.project = "p";
    for (std::size_t i = 0; i < 61; ++i)
        s.commits.push_back({"c" + std::to_string(i), parse_timestamp("2020-01-01") + days{static_cast<int>(i)}, i, true});
    auto make = [&](const std::string& id, std::size_t first, std::size_t last, Disappearance cause) {
        EvolutionChain ch;
        ch.id = id;
        for (std::size_t i = first; i <= last; ++i) {
            Warning w;
            w.type = "T";
            w.category = "C";
            w.location.file_path = id + ".java";
            w.commit = s.commits[i];
            ch.warnings.push_back(w);
            if (i > first) ch.links.push_back(MatchStrategy::Location);
        }
        ch.disappearance = cause;
        if (cause != Disappearance::PersistsToEnd) ch.disappeared_in = s.commits[last + 1];
        return ch;
    };
    auto closed = [&](const std::string& id, std::size_t first, std::size_t life) {
        return make(id, first, first + life - 1, Disappearance::DisappearedWithCodeChange);
    };
    auto open = [&](const std::string& id, std::size_t life) {
        return make(id, 60 - life, 60, Disappearance::PersistsToEnd);
    };
    // Rule table: reviewed closed -> verdict; open -> Unactionable iff lifetime > median (20 days);
    // otherwise Unknown.
    std::vector<EvolutionChain> chains{closed("A10", 0, 10), closed("A20", 5, 20),  closed("A30", 1, 30),
                                       closed("U9", 2, 9),   closed("Q", 3, 4),     open("O5", 5),
                                       open("O19", 19),      open("O20", 20),       open("O21", 21),
                                       open("O60", 60),      make("D", 3, 9, Disappearance::DisappearedOtherwise)};
    std::vector<ReviewDecision> reviews{{"A10", LabelKind::Actionable, "r", ""},
                                        {"A20", LabelKind::Actionable, "r", ""},
                                        {"A30", LabelKind::Actionable, "r", ""},
                                        {"U9", LabelKind::Unactionable, "r", ""},
                                        {"Q", LabelKind::Unknown, "r", ""}};
    std::map<std::string, std::pair<LabelKind, Provenance>> table{
        {"A10", {LabelKind::Actionable, Provenance::ReviewedClosed}},
        {"A20", {LabelKind::Actionable, Provenance::ReviewedClosed}},
        {"A30", {LabelKind::Actionable, Provenance::ReviewedClosed}},
        {"U9", {LabelKind::Unactionable, Provenance::ReviewedClosed}},
        {"Q", {LabelKind::Unknown, Provenance::ExcludedUnknown}},
        {"O5", {LabelKind::Unknown, Provenance::ExcludedUnknown}},
        {"O19", {LabelKind::Unknown, Provenance::ExcludedUnknown}},
        {"O20", {LabelKind::Unknown, Provenance::ExcludedUnknown}},
        {"O21", {LabelKind::Unactionable, Provenance::LifetimeFiltered}},
        {"O60", {LabelKind::Unactionable, Provenance::LifetimeFiltered}},
        {"D", {LabelKind::Unknown, Provenance::ExcludedUnknown}}};
    auto result = finalize_labels(chains, reviews, s);
    Checker c;
    c.expect(result.median && *result.median == days{20}, "median is not 20 days");
    std::size_t deviations = 0;
    std::string first_deviation;
    for (const auto& l : result.labels) {
        auto want = table.at(l.chain_id);
        if (l.kind != want.first || l.provenance != want.second) {
            if (deviations++ == 0) first_deviation = l.chain_id;
        }
    }
    c.expect(result.labels.size() == table.size(), "label count differs from chain count");
    c.expect(deviations == 0, std::to_string(deviations) + " deviations, first " + first_deviation);
    return c.outcome(std::to_string(table.size()) + " rows, 0 deviations, median 20 d");
}

RawContext method_context(std::string text) {
    RawContext r;
    r.source_text = std::move(text);
    r.scope = ContextScope::MethodBody;
    return r;
}

Outcome abstraction() {
    std::mt19937_64 rng(99);
    std::size_t round_trip_failures = 0;
    std::vector<std::string> methods;
    for (std::size_t i = 0; i < 500; ++i) {
        methods.push_back(testing::random_method(rng, i));
        auto abs = abstract_context(method_context(methods.back()), {true, 0});
        if (deabstract(abs) != tokenize(methods.back(), 0).texts()) ++round_trip_failures;
    }
    std::size_t alpha_failures = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        const auto& method = methods[i];
        auto names = testing::renamable_identifiers(method);
        auto from = names[uniform_index(rng, names.size())];
        auto renamed = testing::rename_identifier(method, from, "renamed" + std::to_string(i));
        if (abstract_context(method_context(renamed), {true, 0}).tokens.texts() !=
            abstract_context(method_context(method), {true, 0}).tokens.texts())
            ++alpha_failures;
    }
    const auto example = abstract_context(method_context("int a = 1;")).tokens.rendered();
    Checker c;
    c.expect(round_trip_failures == 0, std::to_string(round_trip_failures) + "/500 round trips differ");
    c.expect(alpha_failures == 0, std::to_string(alpha_failures) + "/100 renamings change the abstraction");
    c.expect(example == "int intVar1 = intLiteral1;", "example rendered as \"" + example + "\"");
    return c.outcome("500 round trips, 100 renamings, \"" + example + "\"");
}

std::size_t positives(const std::vector<LabeledExample>& v) {
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [](const auto& e) { return e.label == LabelKind::Actionable; }));
}

Outcome splits() {
    Checker c;
    auto corpus = testing::separable_corpus(100, 0.1, 1);
    auto split = stratified_split(corpus, {0.7, 0.1, 0.2}, 42);
    c.expect(split.train.size() == 70 && split.validation.size() == 10 && split.test.size() == 20,
             "sizes " + std::to_string(split.train.size()) + "/" + std::to_string(split.validation.size()) + "/" +
                 std::to_string(split.test.size()));
    c.expect(positives(split.train) == 7 && positives(split.validation) == 1 && positives(split.test) == 2,
             "positive counts differ from 7/1/2");

    std::mt19937_64 rng(5);
    std::size_t failures = 0;
    for (int round = 0; round < 50; ++round) {
        auto random = testing::separable_corpus(30 + uniform_index(rng, 300),
                                                0.1 + 0.4 * static_cast<double>(uniform_index(rng, 100)) / 100.0,
                                                rng());
        const auto seed = rng();
        auto a = stratified_split(random, {0.7, 0.1, 0.2}, seed);
        auto shuffled = random;
        seeded_shuffle(shuffled, rng);
        auto b = stratified_split(shuffled, {0.7, 0.1, 0.2}, seed);
        std::multiset<std::string> all, joined;
        for (const auto& e : random) all.insert(e.chain_id);
        for (const auto* part : {&a.train, &a.validation, &a.test})
            for (const auto& e : *part) joined.insert(e.chain_id);
        const bool same = a.train == b.train && a.validation == b.validation && a.test == b.test;
        if (all != joined || !same) ++failures;
    }
    c.expect(failures == 0, std::to_string(failures) + "/50 random corpora violate partition or determinism");
    return c.outcome("70/10/20 with 7/1/2 positives; 50 random corpora");
}

Outcome scenarios() {
    auto corpus = testing::separable_corpus(120, 0.3, 3, {"ant", "bcel", "commons"});
    auto specs = build_scenarios(corpus, 11);
    Checker c;
    c.expect(specs.size() == 12, std::to_string(specs.size()) + " scenarios instead of 12");
    auto ids = [](const std::vector<LabeledExample>& v) {
        std::set<std::string> s;
        for (const auto& e : v) s.insert(e.chain_id);
        return s;
    };
    auto subset = [](const std::set<std::string>& a, const std::set<std::string>& b) {
        return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    for (std::size_t p = 0; p + 3 < specs.size(); p += 4) {
        const auto& w1 = specs[p];
        const auto& w2 = specs[p + 1];
        const auto& c1 = specs[p + 2];
        const auto& c2 = specs[p + 3];
        const auto& project = w1.held_out_project;
        const auto test = ids(w1.test);
        c.expect(!test.empty(), project + ": empty test set");
        for (const auto* s : {&w2, &c1, &c2})
            c.expect(ids(s->test) == test && s->held_out_project == project, project + ": test set not shared");
        c.expect(subset(ids(w2.train), ids(w1.train)), project + ": Within2 train not inside Within1 train");
        c.expect(subset(ids(c1.train), ids(w1.train)), project + ": Cross1 train not inside Within1 train");
        c.expect(c2.train.empty(), project + ": Cross2 train not empty");
        for (const auto* s : {&w1, &w2, &c1}) {
            auto train = ids(s->train);
            for (const auto& id : test) c.expect(!train.count(id), project + ": test id " + id + " in train");
        }
        for (const auto& e : w2.train) c.expect(e.project == project, project + ": Within2 has a foreign example");
        for (const auto& e : c1.train) c.expect(e.project != project, project + ": Cross1 has a held-out example");
    }
    return c.outcome("3 projects x 4 variants");
}

Outcome baseline() {
    Checker c;
    double slowest = 0.0;

    auto train_set = testing::separable_corpus(400, 0.3, 101);
    auto test_set = testing::separable_corpus(200, 0.3, 102);
    auto start = Clock::now();
    auto model = train(synthetic_config(1), train_set);
    slowest = std::max(slowest, seconds_since(start));
    const double separable = model_auc(model, test_set);
    c.expect(separable >= kBaselineMinAuc, "separable AUC " + fmt(separable));

    double shuffled_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto corpus = testing::separable_corpus(600, 0.3, 200 + seed);
        std::vector<LabelKind> labels;
        for (const auto& e : corpus) labels.push_back(e.label);
        std::mt19937_64 rng(seed);
        seeded_shuffle(labels, rng);
        for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].label = labels[i];
        std::vector<LabeledExample> tr(corpus.begin(), corpus.begin() + 400), te(corpus.begin() + 400, corpus.end());
        start = Clock::now();
        auto m = train(synthetic_config(seed), tr);
        slowest = std::max(slowest, seconds_since(start));
        shuffled_sum += model_auc(m, te);
    }
    const double shuffled = shuffled_sum / 10.0;
    c.expect(shuffled >= kShuffledLow && shuffled <= kShuffledHigh, "shuffled-label AUC " + fmt(shuffled));

    auto small = testing::separable_corpus(10, 0.5, 103);
    auto probe = train(synthetic_config(2), small);
    std::vector<std::vector<std::size_t>> ids;
    std::vector<int> labels;
    for (const auto& e : small) {
        ids.push_back(probe.encode(e.tokens));
        labels.push_back(label_value(e.label));
    }
    auto params = probe.params;
    auto analytic = loss_and_gradient(params, ids, labels);
    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t i = params.width; i < params.parameter_count(); ++i) {
        const double saved = params.at(i);
        params.at(i) = saved + h;
        const double up = loss_and_gradient(params, ids, labels).loss;
        params.at(i) = saved - h;
        const double down = loss_and_gradient(params, ids, labels).loss;
        params.at(i) = saved;
        const double numeric = (up - down) / (2 * h);
        const double exact = analytic.gradient.at(i);
        worst = std::max(worst, std::abs(numeric - exact) / std::max({std::abs(numeric), std::abs(exact), 1e-6}));
    }
    c.expect(worst < kGradientTolerance, "gradient relative error " + sci(worst));
    c.expect(slowest < kRunSeconds, "slowest run " + fmt(slowest, 2) + " s");
    return c.outcome("AUC " + fmt(separable) + ", shuffled " + fmt(shuffled) + ", grad err " +
                     sci(worst) + ", slowest " + fmt(slowest, 2) + " s");
}

Outcome ladder() {
    const std::vector<double> fractions{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<double> mean(fractions.size(), 0.0);
    const int seeds = 5;
    for (int seed = 1; seed <= seeds; ++seed) {
        auto corpus = testing::separable_corpus(500, 0.3, 300 + static_cast<std::uint64_t>(seed));
        auto split = stratified_split(corpus, {0.7, 0.1, 0.2}, static_cast<std::uint64_t>(seed));
        auto rungs = finetune_ladder(split.train, fractions, static_cast<std::uint64_t>(seed));
        for (std::size_t i = 0; i < rungs.size(); ++i) {
            const auto cfg = synthetic_config(static_cast<std::uint64_t>(seed));
            bool both = positives(rungs[i]) > 0 && positives(rungs[i]) < rungs[i].size();
            auto model = both ? train(cfg, rungs[i]) : untrained_model(cfg);
            mean[i] += model_auc(model, split.test) / seeds;
        }
    }
    Checker c;
    std::string trend;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        trend += (i ? " " : "") + fmt(mean[i], 3);
        if (i > 0) c.expect(mean[i] >= mean[i - 1], "decrease at rung " + std::to_string(i) + ": ");
    }
    auto out = c.outcome("mean AUC " + trend);
    if (out.status == Status::Fail) out.detail += trend;
    return out;
}

Outcome dataset_fixture() {
    const char* path = std::getenv("AWI_DATASET_FIXTURE");
    if (!path || !*path) return {Status::Skip, "AWI_DATASET_FIXTURE not set (pipeline config for the released export)"};
    auto config = PipelineConfig::load(path);
    config.out = testing::scratch_dir("acceptance_dataset");
    for (auto s : {Stage::Ingest, Stage::Track, Stage::Label}) run_stage(s, config);
    std::size_t actionable = 0, unactionable = 0;
    for (const auto& dir : fs::directory_iterator(config.out / "projects"))
        for (const auto& l : labels_from_jsonl(read_file(dir.path() / "labels.jsonl"))) {
            actionable += l.kind == LabelKind::Actionable;
            unactionable += l.kind == LabelKind::Unactionable;
        }
    fs::remove_all(config.out);
    Checker c;
    c.expect(actionable + unactionable == kDatasetWarnings && unactionable == kDatasetUnactionable &&
                 actionable == kDatasetActionable,
             std::to_string(actionable + unactionable) + " warnings, " + std::to_string(unactionable) +
                 " unactionable, " + std::to_string(actionable) + " actionable");
    return c.outcome("10140 / 9666 / 474");
}

Outcome end_to_end_determinism() {
    auto root = testing::scratch_dir("acceptance_e2e");
    PipelineConfig config;
    std::vector<ReviewDecision> reviews;
    for (const std::string project : {"alpha", "beta", "gamma"}) {
        auto s = testing::make_synthetic_series(project);
        config.manifests.push_back(testing::write_synthetic_project(s, root / "in" / project));
        auto r = testing::planted_reviews(s);
        reviews.insert(reviews.end(), r.begin(), r.end());
    }
    write_file(root / "in" / "reviews.jsonl", reviews_to_jsonl(reviews));
    config.reviews = root / "in" / "reviews.jsonl";
    config.scenarios = parse_scenario_list("all");
    config.fractions = {0.0, 0.5, 1.0};
    config.classifier.epochs = 5;
    config.classifier.learning_rate = 1e-2;

    Checker c;
    std::vector<std::map<std::string, std::string>> artifacts;
    for (int run = 0; run < 2; ++run) {
        config.out = root / ("out" + std::to_string(run));
        config.jobs = run == 0 ? 1 : 4;
        auto result = run_pipeline(config);
        c.expect(result.ok, "run failed at " + result.failed_stage + ": " + result.message);
        std::map<std::string, std::string> files;
        for (const auto* sub : {"corpora", "scenarios", "reports"})
            if (fs::exists(config.out / sub))
                for (const auto& e : fs::recursive_directory_iterator(config.out / sub))
                    if (e.is_regular_file())
                        files[fs::relative(e.path(), config.out).string()] = read_file(e.path());
        artifacts.push_back(std::move(files));
    }
    c.expect(!artifacts[0].empty(), "no artifacts");
    std::string differing;
    for (const auto& [name, content] : artifacts[0]) {
        auto it = artifacts[1].find(name);
        if (it == artifacts[1].end() || it->second != content) differing += " " + name;
    }
    c.expect(artifacts[0].size() == artifacts[1].size() && differing.empty(), "differing artifacts:" + differing);
    fs::remove_all(root);
    return c.outcome(std::to_string(artifacts[0].size()) + " corpus/report files byte-identical");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"auc-oracle-equivalence", auc_oracle},
        {"auc-hand-examples", auc_examples},
        {"tracking-ground-truth", tracking_ground_truth},
        {"lifetime-filter-rule-table", lifetime_filter},
        {"abstraction", abstraction},
        {"splits", splits},
        {"scenarios", scenarios},
        {"baseline-classifier", baseline},
        {"ladder-trend", ladder},
        {"dataset-fixture", dataset_fixture},
        {"end-to-end-determinism", end_to_end_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {Status::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
        std::printf("%s %s: %s\n", tag, name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.status == Status::Fail;
    }
    return failed == 0 ? 0 : 1;
}
