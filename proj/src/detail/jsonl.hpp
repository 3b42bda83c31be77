#pragma once

// Line-oriented JSON helpers shared by the file-format readers.

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pistol::detail {

std::string line_error(std::size_t line, const std::string& what);

/// Lines of `text`; a single trailing newline ends the last record.
std::vector<std::string_view> jsonl_lines(std::string_view text);

/// Throws Parse naming the line for empty lines, bad JSON and non-objects.
nlohmann::json parse_object_line(std::string_view line, std::size_t line_no);

/// Exactly these keys, no more and no fewer.
void require_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                  std::size_t line_no);

std::string string_field(const nlohmann::json& j, const char* key, std::size_t line_no);
int slot_field(const nlohmann::json& j, std::size_t line_no);

}  // namespace pistol::detail
