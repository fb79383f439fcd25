#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypolab {

using json = nlohmann::json;

/// Reads a line-delimited record file; blank lines are skipped.
/// Throws ParseError naming the 1-based line of the first bad record.
std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Appends one compact record plus newline, creating the file if needed.
void append_jsonl(const std::filesystem::path& path, const json& record);

/// Writes all records, replacing any existing file.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace hypolab
