// Command-line front end: one subcommand per pipeline stage plus `run` for the whole pipeline.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 stage failure.

#include <CLI11.hpp>

#include <iostream>

#include "awi/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::vector<std::string> manifests;
    std::string reviews;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::string context;
    std::string abstract;
    std::string ratios;
    std::string fractions;
    std::string scenario;
    std::optional<double> learning_rate;
    std::optional<int> epochs;
    std::vector<std::string> external;
};

awi::PipelineConfig build_config(const Overrides& o) {
    awi::PipelineConfig c;
    if (!o.config.empty()) c = awi::PipelineConfig::load(o.config);
    for (const auto& m : o.manifests) c.manifests.emplace_back(m);
    if (!o.reviews.empty()) c.reviews = o.reviews;
    if (!o.out.empty()) c.out = o.out;
    if (o.seed) {
        c.seed = *o.seed;
        c.classifier.seed = *o.seed;
    }
    if (o.jobs) c.jobs = *o.jobs;
    if (!o.context.empty()) c.method_context = o.context == "method";
    if (!o.abstract.empty()) c.abstract = o.abstract == "on";
    if (!o.ratios.empty()) c.ratios = awi::SplitRatios::parse(o.ratios);
    if (!o.fractions.empty()) c.fractions = awi::parse_fraction_list(o.fractions);
    if (!o.scenario.empty()) c.scenarios = awi::parse_scenario_list(o.scenario);
    if (o.learning_rate) c.classifier.learning_rate = *o.learning_rate;
    if (o.epochs) c.classifier.epochs = *o.epochs;
    for (const auto& e : o.external) {
        auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0) throw awi::Error("--scores expects NAME=PATH, got '" + e + "'");
        c.external_scores.push_back({e.substr(0, eq), e.substr(eq + 1)});
    }
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Actionable-warning identification pipeline"};
    app.set_version_flag("--version", std::string(awi::kToolVersion));
    app.require_subcommand(1);

    Overrides o;
    app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--manifest", o.manifests, "Series manifest (repeatable; adds to the config)");
    app.add_option("--reviews", o.reviews, "Review decisions (JSONL)");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--seed", o.seed, "Global random seed");
    app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--context", o.context, "Context granularity")->check(CLI::IsMember({"line", "method"}));
    app.add_option("--abstract", o.abstract, "Identifier/literal abstraction")->check(CLI::IsMember({"on", "off"}));
    app.add_option("--ratios", o.ratios, "Split ratios train/validation/test, e.g. 0.7/0.1/0.2");
    app.add_option("--fractions", o.fractions, "Fine-tuning ladder fractions, e.g. 0,0.2,0.4");
    app.add_option("--scenario", o.scenario, "within1, within2, cross1, cross2, all or a comma list");
    app.add_option("--lr", o.learning_rate, "Classifier learning rate");
    app.add_option("--epochs", o.epochs, "Classifier epochs");
    app.add_option("--scores", o.external, "External score file NAME=PATH (repeatable)");
    app.fallthrough();

    std::vector<std::pair<CLI::App*, awi::Stage>> stage_commands;
    for (auto st : {awi::Stage::Ingest, awi::Stage::Track, awi::Stage::Label, awi::Stage::Context, awi::Stage::Split,
                    awi::Stage::Scenarios, awi::Stage::Train, awi::Stage::ImportScores, awi::Stage::Eval,
                    awi::Stage::Report})
        stage_commands.emplace_back(app.add_subcommand(std::string(awi::to_string(st)), "Run the " +
                                                       std::string(awi::to_string(st)) + " stage"),
                                    st);
    auto* run = app.add_subcommand("run", "Run every configured stage in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    awi::PipelineConfig config;
    try {
        config = build_config(o);
    } catch (const std::exception& e) {
        std::cerr << "awi: " << e.what() << "\n";
        return 1;
    }

    if (run->parsed()) {
        auto result = awi::run_pipeline(config);
        if (!result.ok) {
            std::cerr << "awi: stage " << result.failed_stage << " failed: " << result.message << "\n";
            return 2;
        }
        std::cout << "run complete: " << (config.out / "reports" / "report.txt").string() << "\n";
        return 0;
    }
    for (const auto& [cmd, stage] : stage_commands) {
        if (!cmd->parsed()) continue;
        try {
            awi::run_stage(stage, config);
        } catch (const std::exception& e) {
            std::cerr << "awi: " << e.what() << "\n";
            return 2;
        }
        std::cout << awi::to_string(stage) << ": ok\n";
    }
    return 0;
}
