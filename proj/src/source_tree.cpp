#include "awi/source_tree.hpp"

#include <fstream>
#include <sstream>

#include "awi/core.hpp"

namespace awi {

struct SourceTree::State {
    std::optional<std::filesystem::path> root;
    std::vector<std::string> source_roots;
    std::mutex mutex;
    // nullopt caches a miss.
    std::map<std::string, std::optional<std::string>> files;

    const std::string* load(const std::string& rel) {
        std::lock_guard lock(mutex);
        if (auto it = files.find(rel); it != files.end()) return it->second ? &*it->second : nullptr;
        if (!root) {
            files.emplace(rel, std::nullopt);
            return nullptr;
        }
        std::ifstream in(*root / rel, std::ios::binary);
        if (!in) {
            files.emplace(rel, std::nullopt);
            return nullptr;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        auto [it, _] = files.emplace(rel, ss.str());
        return &*it->second;
    }
};

SourceTree SourceTree::from_directory(std::filesystem::path root, std::vector<std::string> source_roots) {
    SourceTree t;
    t.state_ = std::make_shared<State>();
    t.state_->root = std::move(root);
    t.state_->source_roots = std::move(source_roots);
    return t;
}

SourceTree SourceTree::from_files(std::map<std::string, std::string> files,
                                  std::vector<std::string> source_roots) {
    SourceTree t;
    t.state_ = std::make_shared<State>();
    t.state_->source_roots = std::move(source_roots);
    for (auto& [path, content] : files) t.state_->files.emplace(path, std::move(content));
    return t;
}

const std::string* SourceTree::file(const std::string& path) const {
    if (!state_ || path.empty()) return nullptr;
    if (const auto* f = state_->load(path)) return f;
    for (const auto& r : state_->source_roots)
        if (const auto* f = state_->load(r + "/" + path)) return f;
    return nullptr;
}

std::optional<std::uint64_t> SourceTree::digest(const std::string& path) const {
    const auto* f = file(path);
    if (!f) return std::nullopt;
    return fnv1a64(*f);
}

std::optional<std::string> SourceTree::lines(const std::string& path, int first, int last) const {
    const auto* f = file(path);
    if (!f || first < 1 || last < first) return std::nullopt;
    std::string out;
    int line = 1;
    std::size_t pos = 0;
    while (pos <= f->size() && line <= last) {
        std::size_t nl = f->find('\n', pos);
        if (nl == std::string::npos) nl = f->size();
        if (line >= first) {
            if (line > first) out.push_back('\n');
            std::string_view l(f->data() + pos, nl - pos);
            if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
            out += l;
        }
        if (nl == f->size()) break;
        pos = nl + 1;
        ++line;
    }
    if (line < last) return std::nullopt;
    return out;
}

}  // namespace awi
