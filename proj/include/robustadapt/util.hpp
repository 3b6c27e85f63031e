#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace robustadapt {

uint64_t fnv1a64(std::span<const char> bytes, uint64_t seed = 0xCBF29CE484222325ull);

std::string to_hex(uint64_t v);

std::vector<char> read_file_bytes(const std::filesystem::path& p);

/// Writes to a sibling temp file then renames into place, so readers never
/// observe a half-written output.
void atomic_write_file(const std::filesystem::path& p, std::span<const char> bytes);
void atomic_write_file(const std::filesystem::path& p, const std::string& text);

}  // namespace robustadapt
