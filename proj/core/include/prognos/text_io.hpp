#pragma once

// Small text helpers shared by the CSV/JSON readers and writers.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace prognos {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Fixed-point with `decimals` digits, for human-facing tables and SVG.
std::string format_fixed(double value, int decimals);

// Strict parsers: the whole field must be consumed. Return false on failure.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, std::int64_t& out);

// Splits on ',' without quoting support (the canonical formats never quote).
std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace prognos
