#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace forge {

// Reports use insertion-ordered JSON so emitted bytes are stable across runs.
using ojson = nlohmann::ordered_json;

std::string read_file(const std::string& path);

// Writes to a sibling temp file, then renames. No partial output on failure.
void atomic_write_file(const std::string& path, const std::string& content);

// Matrix format: first line is n, then n rows of n comma-separated values.
std::vector<std::vector<double>> parse_matrix_csv(const std::string& content);
std::string format_matrix_csv(int n, const std::vector<double>& flat);

std::string format_double(double v);  // %.17g, round-trip exact

std::string hex64(std::uint64_t v);

}  // namespace forge
