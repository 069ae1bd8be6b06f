#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace navtrace::cli {

/// Stamped into every output file.
struct Provenance {
    std::string config_hash;
    std::string version;
    std::uint64_t seed = 0;

    /// "# <version> config_hash=<hash> seed=<seed>" for text and CSV files.
    std::string comment_line() const;
};

/// Writes to a temporary file in the same directory, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Markdown summary (pass/fail and ratios) of the bundle JSON files found in `dir`, in
/// file-name order. Throws InputError if there are none.
std::string markdown_report(const std::filesystem::path& dir);

}  // namespace navtrace::cli
