#include "awi/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "awi/core.hpp"

namespace awi {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error("read failure on '" + path.string() + "'");
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failure on '" + path.string() + "'");
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    return lines;
}

std::string to_jsonl(const std::vector<Json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump(-1, ' ', false, Json::error_handler_t::replace);
        out.push_back('\n');
    }
    return out;
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::filesystem::path& p) {
    if (p.is_absolute() || base.empty()) return p;
    return base / p;
}

}  // namespace awi
