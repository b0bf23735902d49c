#pragma once

// Shared domain model: commits, warnings, snapshots and labels.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace awi {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

/// Parses "YYYY-MM-DDTHH:MM:SS[Z|+HH:MM]" (or a bare date) into UTC seconds.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// Stable 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

struct CommitRef {
    std::string id;
    Timestamp timestamp{};
    std::size_t ordinal = 0;
    bool compilable = false;

    friend bool operator==(const CommitRef&, const CommitRef&) = default;
};

struct CommitSeries {
    std::string project;
    std::vector<CommitRef> commits;
    // Set when the commit export lacked timestamps and day spacing was synthesized.
    bool synthesized_timestamps = false;

    const CommitRef& at(std::size_t ordinal) const { return commits.at(ordinal); }
    std::vector<std::size_t> compilable_ordinals() const;
};

struct WarningLocation {
    std::string file_path;
    std::optional<std::string> class_name;
    std::optional<std::string> method_signature;
    int start_line = 0;  // 0 = analyzer gave no line info
    int end_line = 0;

    bool has_line_info() const { return start_line > 0; }
    friend bool operator==(const WarningLocation&, const WarningLocation&) = default;
};

struct Warning {
    std::string analyzer;
    std::string category;
    std::string type;
    int priority = 0;
    std::string message;
    WarningLocation location;
    CommitRef commit;

    friend bool operator==(const Warning&, const Warning&) = default;
};

/// Checks the field-level invariants of a warning; empty result means valid.
std::vector<std::string> validate_warning(const Warning& w);

/// Identity key over (type, file_path, start_line, end_line, method_signature).
std::string warning_key(const Warning& w);

/// Warnings observed at one commit, deduplicated by warning_key and sorted by it.
class WarningSnapshot {
public:
    WarningSnapshot() = default;
    /// Throws Error if a warning belongs to a different commit.
    WarningSnapshot(CommitRef commit, std::vector<Warning> warnings);

    const CommitRef& commit() const { return commit_; }
    const std::vector<Warning>& warnings() const { return warnings_; }
    std::size_t size() const { return warnings_.size(); }
    std::size_t duplicates_collapsed() const { return duplicates_; }

    friend bool operator==(const WarningSnapshot& a, const WarningSnapshot& b) {
        return a.commit_ == b.commit_ && a.warnings_ == b.warnings_;
    }

private:
    CommitRef commit_;
    std::vector<Warning> warnings_;
    std::size_t duplicates_ = 0;
};

enum class LabelKind { Actionable, Unactionable, Unknown };

std::string_view to_string(LabelKind k);
LabelKind label_kind_from_string(std::string_view s);

struct SeriesViolation {
    std::string commit_id;
    std::string message;
};

std::vector<SeriesViolation> validate_series(const CommitSeries& s);

/// Strip each line, collapse internal whitespace runs and drop blank lines.
std::string normalize_whitespace(std::string_view text);

}  // namespace awi
