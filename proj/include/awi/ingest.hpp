#pragma once

// Analyzer report parsing and commit-series assembly.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "awi/core.hpp"

namespace awi {

/// Malformed XML. `offset` is the byte offset into the report where parsing stopped.
class XmlParseError : public Error {
public:
    XmlParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

struct RecordError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct SpotBugsReport {
    std::vector<Warning> warnings;
    std::vector<std::string> notes;         // schema/version and taxonomy remarks
    std::map<std::string, std::string> taxonomy;  // BugPattern type -> category
    std::size_t without_line_info = 0;
    std::size_t taxonomy_mismatches = 0;
};

/// Parses a SpotBugs/FindBugs BugCollection document. Every warning is stamped with `commit`.
/// Throws XmlParseError on malformed input.
SpotBugsReport parse_spotbugs_report(std::string_view xml, const CommitRef& commit = {});

struct NormalizedReport {
    std::vector<Warning> warnings;
    std::vector<RecordError> errors;
};

/// Parses the line-delimited normalized format. Bad records are reported, not thrown.
NormalizedReport parse_normalized_report(std::string_view content, const CommitRef& commit = {});
std::string export_normalized_report(std::span<const Warning> warnings);

enum class ReportFormat { SpotBugsXml, Normalized };

struct ManifestEntry {
    std::string commit_id;
    std::optional<Timestamp> timestamp;
    bool compilable = false;
    std::optional<std::filesystem::path> report;
    std::optional<std::filesystem::path> source;
    ReportFormat format = ReportFormat::SpotBugsXml;
};

struct SeriesManifest {
    std::string project;
    std::vector<ManifestEntry> entries;
    // Directories under a source snapshot in which analyzer paths (package-relative) are resolved.
    std::vector<std::string> source_roots;
};

/// Relative paths inside the document are resolved against `base_dir`.
SeriesManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
SeriesManifest load_manifest(const std::filesystem::path& path);

struct EntryError {
    std::string commit_id;
    std::string message;
};

struct LoadedSeries {
    CommitSeries series;
    std::vector<WarningSnapshot> snapshots;  // one per compilable commit, ordinal order
    std::map<std::size_t, std::filesystem::path> sources;  // ordinal -> source snapshot dir
    std::vector<EntryError> entry_errors;
    std::vector<std::string> notes;
};

/// Reads and parses every report of the manifest. Unreadable or malformed reports turn their
/// entry non-compilable and are listed in entry_errors. Throws Error if the resulting series
/// violates its invariants.
LoadedSeries load_series(const SeriesManifest& manifest, unsigned jobs = 1);

}  // namespace awi
