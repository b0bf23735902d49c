#include "awi/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <unordered_set>

namespace awi {

namespace {

bool parse_int(std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    auto bad = [&] { return Error("invalid timestamp: '" + std::string(text) + "'"); };
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw bad();
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
        !parse_int(text.substr(8, 2), d))
        throw bad();
    std::string_view rest = text.substr(10);
    int offset_seconds = 0;
    if (!rest.empty()) {
        if ((rest[0] != 'T' && rest[0] != ' ') || rest.size() < 9 || rest[3] != ':' || rest[6] != ':')
            throw bad();
        if (!parse_int(rest.substr(1, 2), h) || !parse_int(rest.substr(4, 2), mi) ||
            !parse_int(rest.substr(7, 2), s))
            throw bad();
        rest = rest.substr(9);
        if (!rest.empty() && rest[0] == '.') {
            std::size_t i = 1;
            while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
            rest = rest.substr(i);
        }
        if (rest == "Z" || rest.empty()) {
        } else if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':') {
            int oh = 0, om = 0;
            if (!parse_int(rest.substr(1, 2), oh) || !parse_int(rest.substr(4, 2), om)) throw bad();
            offset_seconds = (oh * 3600 + om * 60) * (rest[0] == '+' ? 1 : -1);
        } else {
            throw bad();
        }
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw bad();
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - seconds{offset_seconds};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss hms{t - day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::size_t> CommitSeries::compilable_ordinals() const {
    std::vector<std::size_t> out;
    for (const auto& c : commits)
        if (c.compilable) out.push_back(c.ordinal);
    return out;
}

std::vector<std::string> validate_warning(const Warning& w) {
    std::vector<std::string> problems;
    if (w.type.empty()) problems.emplace_back("empty type");
    if (w.category.empty()) problems.emplace_back("empty category");
    if (w.location.file_path.empty()) problems.emplace_back("empty file_path");
    if (w.location.start_line < 0 || w.location.end_line < 0)
        problems.emplace_back("negative line number");
    if (w.location.start_line > w.location.end_line) problems.emplace_back("start_line > end_line");
    if (w.location.method_signature && !w.location.class_name)
        problems.emplace_back("method_signature without class_name");
    return problems;
}

namespace {

void append_escaped(std::string& out, std::string_view field) {
    for (char c : field) {
        if (c == '|' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('|');
}

}  // namespace

std::string warning_key(const Warning& w) {
    std::string key;
    key.reserve(w.type.size() + w.location.file_path.size() + 32);
    append_escaped(key, w.type);
    append_escaped(key, w.location.file_path);
    append_escaped(key, std::to_string(w.location.start_line));
    append_escaped(key, std::to_string(w.location.end_line));
    // "-" vs "+sig" keeps an absent signature distinct from an empty one.
    if (w.location.method_signature)
        append_escaped(key, "+" + *w.location.method_signature);
    else
        append_escaped(key, "-");
    return key;
}

WarningSnapshot::WarningSnapshot(CommitRef commit, std::vector<Warning> warnings)
    : commit_(std::move(commit)) {
    std::vector<std::pair<std::string, std::size_t>> keyed;
    keyed.reserve(warnings.size());
    for (std::size_t i = 0; i < warnings.size(); ++i) {
        if (!(warnings[i].commit == commit_))
            throw Error("warning " + warning_key(warnings[i]) + " belongs to commit '" +
                        warnings[i].commit.id + "', not snapshot commit '" + commit_.id + "'");
        keyed.emplace_back(warning_key(warnings[i]), i);
    }
    // Stable on index so the first occurrence of a duplicate wins.
    std::sort(keyed.begin(), keyed.end());
    warnings_.reserve(keyed.size());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        if (i > 0 && keyed[i].first == keyed[i - 1].first) {
            ++duplicates_;
            continue;
        }
        warnings_.push_back(std::move(warnings[keyed[i].second]));
    }
}

std::string_view to_string(LabelKind k) {
    switch (k) {
        case LabelKind::Actionable: return "actionable";
        case LabelKind::Unactionable: return "unactionable";
        case LabelKind::Unknown: return "unknown";
    }
    return "unknown";
}

LabelKind label_kind_from_string(std::string_view s) {
    if (s == "actionable") return LabelKind::Actionable;
    if (s == "unactionable") return LabelKind::Unactionable;
    if (s == "unknown") return LabelKind::Unknown;
    throw Error("unknown label kind '" + std::string(s) + "'");
}

std::vector<SeriesViolation> validate_series(const CommitSeries& s) {
    std::vector<SeriesViolation> out;
    if (s.commits.empty()) {
        out.push_back({"", "series is empty"});
        return out;
    }
    std::unordered_set<std::string> ids;
    bool any_compilable = false;
    for (std::size_t i = 0; i < s.commits.size(); ++i) {
        const auto& c = s.commits[i];
        if (c.ordinal != i)
            out.push_back({c.id, "ordinal " + std::to_string(c.ordinal) + " at position " +
                                     std::to_string(i) + " (gap or reordering)"});
        if (!ids.insert(c.id).second) out.push_back({c.id, "duplicate commit id"});
        if (i > 0 && c.timestamp < s.commits[i - 1].timestamp)
            out.push_back({c.id, "timestamp earlier than preceding commit"});
        any_compilable = any_compilable || c.compilable;
    }
    if (!any_compilable) out.push_back({s.commits.back().id, "no compilable commit"});
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line;
        bool pending_space = false;
        for (std::size_t i = pos; i < nl; ++i) {
            unsigned char c = static_cast<unsigned char>(text[i]);
            if (std::isspace(c)) {
                pending_space = !line.empty();
            } else {
                if (pending_space) line.push_back(' ');
                pending_space = false;
                line.push_back(static_cast<char>(c));
            }
        }
        if (!line.empty()) {
            if (!out.empty()) out.push_back('\n');
            out += line;
        }
        pos = nl + 1;
    }
    return out;
}

}  // namespace awi
