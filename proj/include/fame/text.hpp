#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fame {

// One physical input line; `number` is 1-based and counts every line,
// including blank and comment lines.
struct TextLine {
  int number;
  std::string_view text;
};

// Splits into physical lines. Accepts "\n" and "\r\n" endings; a UTF-8
// byte-order mark at the start of the buffer is dropped.
std::vector<TextLine> split_lines(std::string_view text);

// Splits on runs of ASCII whitespace; never returns empty fields.
std::vector<std::string_view> split_fields(std::string_view line);

bool contains_whitespace(std::string_view s);

// True for lines the line-oriented parsers skip: blank or '#'-leading.
bool is_skippable(std::string_view line);

// Locale-independent double <-> text. parse_double rejects trailing
// garbage; format_double emits the shortest round-tripping form.
bool parse_double(std::string_view s, double& out);
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace fame
