#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace kdist {

using Json = nlohmann::ordered_json;

/// Reads a whole file; throws DataError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Invokes `fn(object, line_number)` for each non-blank line. Parse errors
/// and non-object lines raise DataError naming the file and line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

/// Compact single-line dump with UTF-8 passed through unescaped.
std::string dump_line(const Json& j);

/// Pretty dump used for reports.
std::string dump_pretty(const Json& j);

}  // namespace kdist
