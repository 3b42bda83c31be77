#include "detail/jsonl.hpp"

#include <algorithm>

#include "pistol/error.hpp"

namespace pistol::detail {

using nlohmann::json;

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

// Splits into lines; a single trailing newline is allowed, blank lines are not.
std::vector<std::string_view> jsonl_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

json parse_object_line(std::string_view line, std::size_t line_no) {
  if (line.empty()) fail(ErrorKind::Parse, line_error(line_no, "empty line"));
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, line_error(line_no, std::string("invalid JSON (") + e.what() + ")"));
  }
  if (!j.is_object()) fail(ErrorKind::Parse, line_error(line_no, "expected a JSON object"));
  return j;
}

std::string string_field(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::Parse, line_error(line_no, std::string("missing \"") + key + "\""));
  if (!it->is_string()) {
    fail(ErrorKind::Parse, line_error(line_no, std::string("\"") + key + "\" must be a string"));
  }
  return it->get<std::string>();
}

void require_keys(const json& j, std::initializer_list<const char*> keys, std::size_t line_no) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      fail(ErrorKind::Parse, line_error(line_no, "unexpected key \"" + it.key() + "\""));
    }
  }
  for (const char* k : keys) {
    if (!j.contains(k)) fail(ErrorKind::Parse, line_error(line_no, std::string("missing \"") + k + "\""));
  }
}

int slot_field(const json& j, std::size_t line_no) {
  auto it = j.find("slot");
  if (it == j.end()) fail(ErrorKind::Parse, line_error(line_no, "missing \"slot\""));
  if (!it->is_number_integer() || it->get<std::int64_t>() < 1 || it->get<std::int64_t>() > 20) {
    fail(ErrorKind::Parse, line_error(line_no, "\"slot\" must be an integer in 1..20"));
  }
  return it->get<int>();
}

}  // namespace pistol::detail
