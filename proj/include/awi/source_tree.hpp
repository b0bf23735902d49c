#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace awi {

/// The source code of one commit. Backed by a directory (read lazily, cached) or by an
/// in-memory file map. Lookups try the path as given, then under each source root.
class SourceTree {
public:
    static SourceTree from_directory(std::filesystem::path root, std::vector<std::string> source_roots = {});
    static SourceTree from_files(std::map<std::string, std::string> files,
                                 std::vector<std::string> source_roots = {});

    /// File content, or nullptr if the file does not exist in this snapshot.
    const std::string* file(const std::string& path) const;
    /// Digest of the file content; nullopt if absent.
    std::optional<std::uint64_t> digest(const std::string& path) const;
    /// Lines [first, last] (1-based, inclusive) joined with '\n'; nullopt if absent or out of range.
    std::optional<std::string> lines(const std::string& path, int first, int last) const;

private:
    struct State;
    std::shared_ptr<State> state_;
};

/// Ordinal of a commit -> its source tree. Absent ordinals have no snapshot.
using SourceSet = std::map<std::size_t, SourceTree>;

}  // namespace awi
