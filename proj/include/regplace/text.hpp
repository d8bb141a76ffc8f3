#pragma once

// Small text helpers shared by the file formats.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace regplace::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Fixed-point form with `digits` decimals.
std::string format_fixed(double value, int digits);

/// Strict parse of the whole token; returns false on trailing garbage.
bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, std::int64_t& out);

std::vector<std::string_view> split(std::string_view line, char sep);

struct Token {
  std::string_view text;
  int column;  // 1-based
};

/// Whitespace tokenizer; stops at `#`.
std::vector<Token> tokenize(std::string_view line);

std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace regplace::text
