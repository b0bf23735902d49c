#include "awi/labeling.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "awi/jsonl.hpp"

namespace awi {

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::ReviewedClosed: return "reviewed_closed";
        case Provenance::LifetimeFiltered: return "lifetime_filtered";
        case Provenance::ExcludedUnknown: return "excluded_unknown";
    }
    return "excluded_unknown";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "reviewed_closed") return Provenance::ReviewedClosed;
    if (s == "lifetime_filtered") return Provenance::LifetimeFiltered;
    if (s == "excluded_unknown") return Provenance::ExcludedUnknown;
    throw Error("unknown provenance '" + std::string(s) + "'");
}

Lifetime lifetime(const EvolutionChain& chain, const CommitSeries& series) {
    if (chain.warnings.empty()) throw Error("lifetime of an empty chain");
    Timestamp end{};
    if (chain.disappeared_in) {
        end = series.at(chain.disappeared_in->ordinal).timestamp;
    } else {
        auto compilable = series.compilable_ordinals();
        if (compilable.empty()) throw Error("series has no compilable commit");
        end = series.at(compilable.back()).timestamp;
    }
    Timestamp begin = series.at(chain.first_seen().ordinal).timestamp;
    Duration d = end - begin;
    if (d < Duration{0}) throw Error("negative lifetime for chain " + chain.id);
    return {chain.id, d, series.synthesized_timestamps};
}

Duration median_actionable_lifetime(std::span<const Lifetime> actionable) {
    if (actionable.empty()) throw Error("no actionable baseline");
    std::vector<Duration> d;
    d.reserve(actionable.size());
    for (const auto& l : actionable) d.push_back(l.duration);
    std::sort(d.begin(), d.end());
    return d[(d.size() - 1) / 2];
}

std::vector<GroundTruthLabel> filter_open(std::span<const Lifetime> open, Duration median) {
    std::vector<GroundTruthLabel> out;
    out.reserve(open.size());
    for (const auto& l : open) {
        if (l.duration > median)
            out.push_back({l.chain_id, LabelKind::Unactionable, Provenance::LifetimeFiltered, l.duration});
        else
            out.push_back({l.chain_id, LabelKind::Unknown, Provenance::ExcludedUnknown, l.duration});
    }
    return out;
}

LabelingResult finalize_labels(const std::vector<EvolutionChain>& chains,
                               std::span<const ReviewDecision> reviews, const CommitSeries& series) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < chains.size(); ++i) index.emplace(chains[i].id, i);

    std::map<std::size_t, const ReviewDecision*> review_of;
    std::vector<std::string> unknown_ids, repeated_ids;
    LabelingResult result;
    for (const auto& r : reviews) {
        auto it = index.find(r.chain_id);
        if (it == index.end()) {
            unknown_ids.push_back(r.chain_id);
            continue;
        }
        if (initial_label(chains[it->second]).kind != InitialKind::Closed) {
            result.notes.push_back("review for non-closed chain " + r.chain_id + " ignored");
            continue;
        }
        if (!review_of.emplace(it->second, &r).second) repeated_ids.push_back(r.chain_id);
    }
    auto join = [](const std::vector<std::string>& ids) {
        std::string s;
        for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
        return s;
    };
    if (!unknown_ids.empty()) throw Error("reviews reference unknown chain ids: " + join(unknown_ids));
    if (!repeated_ids.empty()) throw Error("chains reviewed more than once: " + join(repeated_ids));

    std::vector<Lifetime> lifetimes;
    lifetimes.reserve(chains.size());
    for (const auto& ch : chains) lifetimes.push_back(lifetime(ch, series));

    result.labels.resize(chains.size());
    std::vector<Lifetime> actionable;
    std::vector<std::size_t> open;
    std::size_t unreviewed = 0;
    for (std::size_t i = 0; i < chains.size(); ++i) {
        auto& label = result.labels[i];
        label.chain_id = chains[i].id;
        label.lifetime = lifetimes[i].duration;
        switch (initial_label(chains[i]).kind) {
            case InitialKind::Closed: {
                auto it = review_of.find(i);
                if (it == review_of.end()) {
                    ++unreviewed;
                    break;
                }
                if (it->second->verdict == LabelKind::Unknown) break;
                label.kind = it->second->verdict;
                label.provenance = Provenance::ReviewedClosed;
                if (label.kind == LabelKind::Actionable) actionable.push_back(lifetimes[i]);
                break;
            }
            case InitialKind::Open: open.push_back(i); break;
            case InitialKind::UnknownInit: break;
        }
    }
    if (unreviewed > 0)
        result.notes.push_back(std::to_string(unreviewed) + " closed chain(s) unreviewed, excluded");

    if (actionable.empty()) {
        result.notes.emplace_back("no actionable baseline: lifetime filter skipped, open chains excluded");
        return result;
    }
    result.median = median_actionable_lifetime(actionable);
    std::vector<Lifetime> open_lifetimes;
    for (auto i : open) open_lifetimes.push_back(lifetimes[i]);
    auto filtered = filter_open(open_lifetimes, *result.median);
    for (std::size_t k = 0; k < open.size(); ++k) result.labels[open[k]] = filtered[k];
    if (series.synthesized_timestamps)
        result.notes.emplace_back("lifetimes computed from synthesized timestamps (low confidence)");
    return result;
}

std::vector<ReviewDecision> reviews_from_jsonl(std::string_view text) {
    std::vector<ReviewDecision> out;
    auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            Json r = Json::parse(lines[n]);
            ReviewDecision d;
            d.chain_id = r.at("chain_id").get<std::string>();
            d.verdict = label_kind_from_string(r.at("verdict").get<std::string>());
            d.reviewer = r.value("reviewer", "");
            d.note = r.value("note", "");
            out.push_back(std::move(d));
        } catch (const std::exception& e) {
            throw Error("review file line " + std::to_string(n + 1) + ": " + e.what());
        }
    }
    return out;
}

std::string reviews_to_jsonl(std::span<const ReviewDecision> reviews) {
    std::vector<Json> records;
    for (const auto& r : reviews) {
        Json j;
        j["chain_id"] = r.chain_id;
        j["verdict"] = to_string(r.verdict);
        j["reviewer"] = r.reviewer;
        j["note"] = r.note;
        records.push_back(std::move(j));
    }
    return to_jsonl(records);
}

std::string review_queue_to_jsonl(const std::vector<EvolutionChain>& chains) {
    std::vector<ReviewDecision> queue;
    for (const auto& ch : chains) {
        if (initial_label(ch).kind != InitialKind::Closed) continue;
        std::string note = ch.last_warning().type + " at " + ch.last_warning().location.file_path + ":" +
                           std::to_string(ch.last_warning().location.start_line);
        if (ch.has_flag(chain_flags::kFileDeleted)) note += " (file deleted)";
        queue.push_back({ch.id, LabelKind::Unknown, "", note});
    }
    return reviews_to_jsonl(queue);
}

std::string labels_to_jsonl(std::span<const GroundTruthLabel> labels) {
    std::vector<Json> records;
    for (const auto& l : labels) {
        Json j;
        j["chain_id"] = l.chain_id;
        j["kind"] = to_string(l.kind);
        j["provenance"] = to_string(l.provenance);
        j["lifetime_seconds"] = l.lifetime.count();
        records.push_back(std::move(j));
    }
    return to_jsonl(records);
}

std::vector<GroundTruthLabel> labels_from_jsonl(std::string_view text) {
    std::vector<GroundTruthLabel> out;
    auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        try {
            Json j = Json::parse(lines[n]);
            GroundTruthLabel l;
            l.chain_id = j.at("chain_id").get<std::string>();
            l.kind = label_kind_from_string(j.at("kind").get<std::string>());
            l.provenance = provenance_from_string(j.at("provenance").get<std::string>());
            l.lifetime = Duration{j.at("lifetime_seconds").get<long long>()};
            out.push_back(std::move(l));
        } catch (const std::exception& e) {
            throw Error("label dump line " + std::to_string(n + 1) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace awi
