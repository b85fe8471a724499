#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kgmon::text {

bool is_space(char c) noexcept;

std::string_view trim(std::string_view s) noexcept;

// Trim and collapse internal whitespace runs to a single space. Case is kept.
std::string normalize_surface(std::string_view s);

// ASCII lower-casing; bytes >= 0x80 pass through untouched.
std::string fold_case(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

// Splits on whitespace runs, dropping empty pieces.
std::vector<std::string_view> split_ws(std::string_view s);

bool contains_space(std::string_view s) noexcept;

// Lines without their terminators; a trailing '\r' is stripped.
std::vector<std::string_view> lines(std::string_view s);

std::string read_file(const std::filesystem::path& path);

}  // namespace kgmon::text
