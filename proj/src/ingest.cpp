#include "awi/ingest.hpp"

#include <algorithm>
#include <boost/property_tree/detail/rapidxml.hpp>
#include <charconv>
#include <mutex>

#include "awi/jsonl.hpp"
#include "awi/parallel.hpp"

namespace awi {

namespace rx = boost::property_tree::detail::rapidxml;
using XmlNode = rx::xml_node<char>;

namespace {

std::optional<std::string_view> attr(const XmlNode* node, const char* name) {
    if (!node) return std::nullopt;
    const auto* a = node->first_attribute(name);
    if (!a) return std::nullopt;
    return std::string_view(a->value(), a->value_size());
}

std::optional<int> int_attr(const XmlNode* node, const char* name) {
    auto v = attr(node, name);
    if (!v) return std::nullopt;
    int out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || p != v->data() + v->size()) return std::nullopt;
    return out;
}

bool is_primary(const XmlNode* node) {
    auto p = attr(node, "primary");
    return p && *p == "true";
}

// First child element named `name` flagged primary="true", else the first one.
const XmlNode* primary_child(const XmlNode* parent, const char* name) {
    const XmlNode* first = parent->first_node(name);
    for (const XmlNode* n = first; n; n = n->next_sibling(name))
        if (is_primary(n)) return n;
    return first;
}

std::string path_from_class(std::string_view classname) {
    std::string cls(classname.substr(0, classname.find('$')));
    std::replace(cls.begin(), cls.end(), '.', '/');
    return cls + ".java";
}

std::string file_path_for(const XmlNode* source_line, std::optional<std::string_view> classname) {
    if (auto p = attr(source_line, "sourcepath"); p && !p->empty()) return std::string(*p);
    if (auto f = attr(source_line, "sourcefile"); f && !f->empty() && classname) {
        std::string pkg(classname->substr(0, classname->rfind('.') == std::string_view::npos
                                                 ? 0
                                                 : classname->rfind('.')));
        std::replace(pkg.begin(), pkg.end(), '.', '/');
        return pkg.empty() ? std::string(*f) : pkg + "/" + std::string(*f);
    }
    if (classname) return path_from_class(*classname);
    return {};
}

std::string element_text(const XmlNode* parent, const char* name) {
    const XmlNode* n = parent->first_node(name);
    if (!n) return {};
    return std::string(n->value(), n->value_size());
}

}  // namespace

SpotBugsReport parse_spotbugs_report(std::string_view xml, const CommitRef& commit) {
    std::vector<char> buffer(xml.begin(), xml.end());
    buffer.push_back('\0');
    rx::xml_document<char> doc;
    try {
        doc.parse<rx::parse_default | rx::parse_validate_closing_tags>(buffer.data());
    } catch (const rx::parse_error& e) {
        auto offset = static_cast<std::size_t>(e.where<char>() - buffer.data());
        throw XmlParseError(std::string("malformed XML: ") + e.what(), offset);
    }
    const XmlNode* root = doc.first_node("BugCollection");
    if (!root) throw XmlParseError("malformed report: no BugCollection root element", 0);

    SpotBugsReport report;
    std::string analyzer = "SpotBugs";
    if (auto version = attr(root, "version")) {
        analyzer += " " + std::string(*version);
        int major = 0;
        std::from_chars(version->data(), version->data() + version->size(), major);
        if (major < 2 || major > 4)
            report.notes.push_back("unrecognized report schema version '" + std::string(*version) +
                                   "', parsed best-effort");
    } else {
        report.notes.emplace_back("report has no schema version, parsed best-effort");
    }

    for (const XmlNode* p = root->first_node("BugPattern"); p; p = p->next_sibling("BugPattern")) {
        auto type = attr(p, "type");
        auto category = attr(p, "category");
        if (type && category) report.taxonomy.emplace(*type, *category);
    }

    std::size_t multi_line_instances = 0;
    for (const XmlNode* bug = root->first_node("BugInstance"); bug;
         bug = bug->next_sibling("BugInstance")) {
        Warning w;
        w.analyzer = analyzer;
        w.type = std::string(attr(bug, "type").value_or(""));
        w.category = std::string(attr(bug, "category").value_or(""));
        w.priority = int_attr(bug, "priority").value_or(0);
        w.message = element_text(bug, "LongMessage");
        if (w.message.empty()) w.message = element_text(bug, "ShortMessage");
        w.commit = commit;

        const XmlNode* cls = primary_child(bug, "Class");
        const XmlNode* method = primary_child(bug, "Method");
        auto classname = attr(cls, "classname");
        if (classname) w.location.class_name = std::string(*classname);
        if (method) {
            if (!w.location.class_name) {
                if (auto mc = attr(method, "classname")) w.location.class_name = std::string(*mc);
            }
            if (w.location.class_name) {
                w.location.method_signature = std::string(attr(method, "name").value_or("")) +
                                              std::string(attr(method, "signature").value_or(""));
            }
        }

        const XmlNode* line = primary_child(bug, "SourceLine");
        if (line && line->next_sibling("SourceLine")) ++multi_line_instances;
        auto start = int_attr(line, "start");
        if (line && start && *start > 0) {
            w.location.start_line = *start;
            w.location.end_line = std::max(*start, int_attr(line, "end").value_or(*start));
        } else {
            ++report.without_line_info;
        }
        const XmlNode* path_source = line ? line : (cls ? cls->first_node("SourceLine") : nullptr);
        auto path_class = attr(line, "classname");
        w.location.file_path = file_path_for(path_source, path_class ? path_class : classname);

        if (auto it = report.taxonomy.find(w.type);
            it != report.taxonomy.end() && !w.category.empty() && it->second != w.category) {
            ++report.taxonomy_mismatches;
            report.notes.push_back("type " + w.type + " reported under category " + w.category +
                                   ", taxonomy says " + it->second);
        }
        report.warnings.push_back(std::move(w));
    }
    if (report.without_line_info > 0)
        report.notes.push_back(std::to_string(report.without_line_info) +
                               " BugInstance(s) without line info");
    if (multi_line_instances > 0)
        report.notes.push_back(std::to_string(multi_line_instances) +
                               " BugInstance(s) with several SourceLines; used primary or first");
    return report;
}

namespace {

const char* const kMandatory[] = {"analyzer", "category", "type", "priority",
                                  "message", "file_path", "start_line", "end_line"};

Json warning_to_json(const Warning& w) {
    Json j;
    j["analyzer"] = w.analyzer;
    j["category"] = w.category;
    j["type"] = w.type;
    j["priority"] = w.priority;
    j["message"] = w.message;
    j["file_path"] = w.location.file_path;
    j["start_line"] = w.location.start_line;
    j["end_line"] = w.location.end_line;
    if (w.location.class_name) j["class_name"] = *w.location.class_name;
    if (w.location.method_signature) j["method_signature"] = *w.location.method_signature;
    return j;
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

NormalizedReport parse_normalized_report(std::string_view content, const CommitRef& commit) {
    NormalizedReport out;
    auto lines = split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            Json j = Json::parse(line);
            if (!j.is_object()) throw Error("record is not an object");
            for (const char* key : kMandatory)
                if (!j.contains(key)) throw Error(std::string("missing mandatory field '") + key + "'");
            Warning w;
            w.analyzer = j.at("analyzer").get<std::string>();
            w.category = j.at("category").get<std::string>();
            w.type = j.at("type").get<std::string>();
            w.priority = j.at("priority").get<int>();
            w.message = j.at("message").get<std::string>();
            w.location.file_path = j.at("file_path").get<std::string>();
            w.location.start_line = j.at("start_line").get<int>();
            w.location.end_line = j.at("end_line").get<int>();
            w.location.class_name = optional_string(j, "class_name");
            w.location.method_signature = optional_string(j, "method_signature");
            w.commit = commit;
            if (auto problems = validate_warning(w); !problems.empty()) throw Error(problems.front());
            out.warnings.push_back(std::move(w));
        } catch (const std::exception& e) {
            out.errors.push_back({i + 1, e.what()});
        }
    }
    return out;
}

std::string export_normalized_report(std::span<const Warning> warnings) {
    std::vector<Json> records;
    records.reserve(warnings.size());
    for (const auto& w : warnings) records.push_back(warning_to_json(w));
    return to_jsonl(records);
}

SeriesManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw Error(std::string("manifest is not valid JSON: ") + e.what());
    }
    SeriesManifest m;
    try {
        m.project = doc.at("project").get<std::string>();
        if (doc.contains("source_roots"))
            m.source_roots = doc.at("source_roots").get<std::vector<std::string>>();
        for (const auto& e : doc.at("entries")) {
            ManifestEntry entry;
            entry.commit_id = e.at("commit").get<std::string>();
            entry.compilable = e.value("compilable", false);
            if (auto it = e.find("timestamp"); it != e.end() && !it->is_null()) {
                entry.timestamp = it->is_number_integer()
                                      ? Timestamp{std::chrono::seconds{it->get<long long>()}}
                                      : parse_timestamp(it->get<std::string>());
            }
            if (auto r = optional_string(e, "report")) entry.report = resolve_path(base_dir, *r);
            if (auto s = optional_string(e, "source")) entry.source = resolve_path(base_dir, *s);
            std::string format = e.value("format", "");
            if (format.empty()) {
                auto ext = entry.report ? entry.report->extension().string() : std::string{};
                format = (ext == ".jsonl" || ext == ".ndjson") ? "normalized" : "spotbugs";
            }
            if (format == "spotbugs")
                entry.format = ReportFormat::SpotBugsXml;
            else if (format == "normalized")
                entry.format = ReportFormat::Normalized;
            else
                throw Error("unknown report format '" + format + "'");
            if (entry.compilable != entry.report.has_value())
                throw Error("entry '" + entry.commit_id +
                            "': report path must be present exactly when compilable");
            m.entries.push_back(std::move(entry));
        }
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed manifest: ") + e.what());
    }
    if (m.project.empty()) throw Error("manifest has an empty project name");
    return m;
}

SeriesManifest load_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_file(path), path.parent_path());
}

LoadedSeries load_series(const SeriesManifest& manifest, unsigned jobs) {
    LoadedSeries out;
    out.series.project = manifest.project;
    const std::size_t n = manifest.entries.size();

    bool synthesize = std::any_of(manifest.entries.begin(), manifest.entries.end(),
                                  [](const ManifestEntry& e) { return !e.timestamp; });
    out.series.synthesized_timestamps = synthesize && n > 0;
    if (out.series.synthesized_timestamps)
        out.notes.emplace_back("commit timestamps missing; synthesized at 1-day spacing");

    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = manifest.entries[i];
        CommitRef c;
        c.id = e.commit_id;
        c.ordinal = i;
        c.compilable = e.compilable;
        c.timestamp = synthesize ? Timestamp{std::chrono::days{static_cast<long>(i)}} : *e.timestamp;
        out.series.commits.push_back(std::move(c));
    }

    struct Parsed {
        std::vector<Warning> warnings;
        std::optional<std::string> error;
        std::vector<std::string> notes;
    };
    std::vector<Parsed> parsed(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        if (!e.compilable) return;
        auto& slot = parsed[i];
        const CommitRef& commit = out.series.commits[i];
        try {
            std::string content = read_file(*e.report);
            if (e.format == ReportFormat::SpotBugsXml) {
                auto r = parse_spotbugs_report(content, commit);
                slot.warnings = std::move(r.warnings);
                slot.notes = std::move(r.notes);
            } else {
                auto r = parse_normalized_report(content, commit);
                slot.warnings = std::move(r.warnings);
                for (const auto& err : r.errors)
                    slot.notes.push_back("line " + std::to_string(err.line) + ": " + err.message);
            }
        } catch (const std::exception& ex) {
            slot.error = ex.what();
        }
    });

    // Merge in manifest order.
    for (std::size_t i = 0; i < n; ++i) {
        auto& commit = out.series.commits[i];
        const auto& e = manifest.entries[i];
        for (auto& note : parsed[i].notes) out.notes.push_back(commit.id + ": " + note);
        if (!commit.compilable) continue;
        if (parsed[i].error) {
            out.entry_errors.push_back({commit.id, *parsed[i].error});
            commit.compilable = false;
            continue;
        }
        for (auto& w : parsed[i].warnings) w.commit = commit;
        WarningSnapshot snap(commit, std::move(parsed[i].warnings));
        if (snap.duplicates_collapsed() > 0)
            out.notes.push_back(commit.id + ": collapsed " + std::to_string(snap.duplicates_collapsed()) +
                                " duplicate warning(s)");
        out.snapshots.push_back(std::move(snap));
        if (e.source) out.sources.emplace(i, *e.source);
    }

    if (auto violations = validate_series(out.series); !violations.empty()) {
        std::string msg = "invalid commit series for project '" + manifest.project + "':";
        for (const auto& v : violations) msg += " [" + v.commit_id + "] " + v.message + ";";
        throw Error(msg);
    }
    return out;
}

}  // namespace awi
