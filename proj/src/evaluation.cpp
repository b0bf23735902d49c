#include "awi/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "awi/jsonl.hpp"

namespace awi {

double auc(std::span<const ScoredLabel> scored) {
    std::vector<ScoredLabel> v(scored.begin(), scored.end());
    std::size_t positives = 0;
    for (const auto& s : v) {
        if (s.label != 0 && s.label != 1) throw Error("AUC labels must be 0 or 1");
        if (std::isnan(s.score)) throw Error("AUC input contains NaN scores");
        positives += static_cast<std::size_t>(s.label);
    }
    const std::size_t negatives = v.size() - positives;
    if (positives == 0 || negatives == 0) throw Error("AUC undefined: both classes are required");
    std::sort(v.begin(), v.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
    // Sum of midranks of the positives.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        std::size_t pos_in_block = 0;
        while (j < v.size() && v[j].score == v[i].score) pos_in_block += static_cast<std::size_t>(v[j++].label);
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        rank_sum += midrank * static_cast<double>(pos_in_block);
        i = j;
    }
    const double p = static_cast<double>(positives);
    const double n = static_cast<double>(negatives);
    return (rank_sum - p * (p + 1) / 2.0) / (p * n);
}

EvalReport evaluate(std::span<const PredictionScore> scores, const std::map<std::string, LabelKind>& labels,
                    std::string model, std::string scenario, std::string group) {
    EvalReport r;
    r.model = std::move(model);
    r.scenario = std::move(scenario);
    r.group = std::move(group);
    std::map<std::string, double> by_id;
    for (const auto& s : scores) by_id[s.chain_id] = s.score;

    std::vector<ScoredLabel> scored;
    for (const auto& [id, kind] : labels) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            r.missing_ids.push_back(id);
            continue;
        }
        int y = label_value(kind);
        scored.push_back({it->second, y});
        (y == 1 ? r.positives : r.negatives) += 1;
    }
    if (scored.empty()) throw Error("no scored example overlaps the test labels (" + r.scenario + ")");
    r.partial = !r.missing_ids.empty();
    if (r.partial) r.notes.push_back(std::to_string(r.missing_ids.size()) + " test example(s) without a score");
    std::size_t extra = 0;
    for (const auto& [id, _] : by_id) extra += labels.count(id) ? 0 : 1;
    if (extra > 0) r.notes.push_back(std::to_string(extra) + " score(s) for ids outside the test set ignored");
    if (r.positives > 0 && r.negatives > 0)
        r.auc = auc(scored);
    else
        r.notes.emplace_back("AUC undefined: test set has a single class");
    return r;
}

std::string OverlapReport::region_name(std::uint32_t mask) const {
    if (mask == 0) return "none";
    std::string name;
    for (std::size_t i = 0; i < models.size(); ++i)
        if (mask & (1u << i)) name += (name.empty() ? "" : "+") + models[i];
    return name;
}

OverlapReport overlap(const std::vector<std::pair<std::string, ModelPredictions>>& per_model,
                      const std::map<std::string, int>& truth) {
    if (per_model.empty()) throw Error("overlap needs at least one model");
    if (per_model.size() > 16) throw Error("overlap supports at most 16 models");
    OverlapReport r;
    std::string missing;
    for (const auto& [name, preds] : per_model) {
        r.models.push_back(name);
        for (const auto& [id, _] : truth)
            if (!preds.count(id)) missing += " " + name + ":" + id;
    }
    if (!missing.empty()) throw Error("models do not cover the test set; missing" + missing);
    for (std::uint32_t mask = 0; mask < (1u << per_model.size()); ++mask) r.regions[mask] = 0;
    for (const auto& [id, y] : truth) {
        std::uint32_t mask = 0;
        for (std::size_t i = 0; i < per_model.size(); ++i)
            if (per_model[i].second.at(id) == y) mask |= 1u << i;
        ++r.regions[mask];
        if (mask) ++r.union_correct;
    }
    r.total = truth.size();
    r.union_accuracy = r.total ? static_cast<double>(r.union_correct) / static_cast<double>(r.total) : 0.0;
    return r;
}

namespace {

Json report_to_json(const EvalReport& r) {
    Json j;
    j["model"] = r.model;
    j["scenario"] = r.scenario;
    j["group"] = r.group;
    j["auc"] = r.auc ? Json(*r.auc) : Json(nullptr);
    j["positives"] = r.positives;
    j["negatives"] = r.negatives;
    j["partial"] = r.partial;
    j["missing_ids"] = r.missing_ids;
    j["notes"] = r.notes;
    j["provenance"] = r.provenance;
    return j;
}

std::vector<EvalReport> sorted(std::span<const EvalReport> reports) {
    std::vector<EvalReport> v(reports.begin(), reports.end());
    std::stable_sort(v.begin(), v.end(), [](const EvalReport& a, const EvalReport& b) {
        return std::tie(a.group, a.scenario, a.model) < std::tie(b.group, b.scenario, b.model);
    });
    return v;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string eval_reports_to_json(std::span<const EvalReport> reports) {
    Json arr = Json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    return arr.dump(2) + "\n";
}

std::vector<EvalReport> eval_reports_from_json(std::string_view text) {
    std::vector<EvalReport> out;
    try {
        for (const auto& j : Json::parse(text)) {
            EvalReport r;
            r.model = j.at("model").get<std::string>();
            r.scenario = j.at("scenario").get<std::string>();
            r.group = j.value("group", "");
            if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
            r.positives = j.at("positives").get<std::size_t>();
            r.negatives = j.at("negatives").get<std::size_t>();
            r.partial = j.value("partial", false);
            r.missing_ids = j.value("missing_ids", std::vector<std::string>{});
            r.notes = j.value("notes", std::vector<std::string>{});
            r.provenance = j.value("provenance", std::map<std::string, std::string>{});
            out.push_back(std::move(r));
        }
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed evaluation file: ") + e.what());
    }
    return out;
}

RenderedFiles render_report(std::span<const EvalReport> reports, const std::filesystem::path& dir,
                            std::span<const OverlapReport> overlaps) {
    if (reports.empty()) throw Error("nothing to render");
    auto ordered = sorted(reports);

    Json doc;
    Json groups = Json::array();
    std::ostringstream text;
    char line[512];
    for (std::size_t i = 0; i < ordered.size();) {
        const std::string group = ordered[i].group;
        Json g;
        g["group"] = group;
        g["reports"] = Json::array();
        text << "== " << (group.empty() ? "(ungrouped)" : group) << " ==\n";
        std::snprintf(line, sizeof line, "%-32s %-16s %8s %8s %6s %6s  %s\n", "scenario", "model", "AUC", "AUC%",
                      "P", "N", "notes");
        text << line;
        for (; i < ordered.size() && ordered[i].group == group; ++i) {
            const auto& r = ordered[i];
            Json rj = report_to_json(r);
            rj["auc_rounded"] = r.auc ? Json(std::round(*r.auc * 1e4) / 1e4) : Json(nullptr);
            g["reports"].push_back(std::move(rj));
            std::string notes;
            for (const auto& n : r.notes) notes += (notes.empty() ? "" : "; ") + n;
            std::snprintf(line, sizeof line, "%-32s %-16s %8s %8s %6zu %6zu  %s\n", r.scenario.c_str(),
                          r.model.c_str(), r.auc ? fixed(*r.auc, 4).c_str() : "n/a",
                          r.auc ? (fixed(*r.auc * 100.0, 2) + "%").c_str() : "n/a", r.positives, r.negatives,
                          notes.c_str());
            text << line;
        }
        text << "\n";
        groups.push_back(std::move(g));
    }
    doc["groups"] = std::move(groups);

    Json ov = Json::array();
    for (const auto& o : overlaps) {
        Json oj;
        oj["models"] = o.models;
        Json regions = Json::array();
        text << "== overlap: ";
        for (std::size_t k = 0; k < o.models.size(); ++k) text << (k ? ", " : "") << o.models[k];
        text << " ==\n";
        for (const auto& [mask, count] : o.regions) {
            regions.push_back({{"correct_models", o.region_name(mask)}, {"count", count}});
            std::snprintf(line, sizeof line, "  %-40s %6zu\n", o.region_name(mask).c_str(), count);
            text << line;
        }
        oj["regions"] = std::move(regions);
        oj["total"] = o.total;
        oj["union_correct"] = o.union_correct;
        oj["union_accuracy"] = o.union_accuracy;
        text << "  union correct: " << o.union_correct << "/" << o.total << " (oracle-ensemble accuracy "
             << fixed(o.union_accuracy * 100.0, 2) << "%)\n\n";
        ov.push_back(std::move(oj));
    }
    doc["overlaps"] = std::move(ov);

    RenderedFiles files{dir / "report.json", dir / "report.txt"};
    write_file(files.json, doc.dump(2) + "\n");
    write_file(files.text, text.str());
    return files;
}

}  // namespace awi
