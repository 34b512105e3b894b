#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dkspde/grid.hpp"

namespace dkspde {

/// Shortest round-trip decimal form of a double (at most 17 significant digits).
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

/// index columns (i or i,j) plus value.
std::string field_to_csv(const GridState& field);

/// Little-endian float64 row-major block at `path` plus `path`.hdr with d, n, time.
void write_snapshot(const std::filesystem::path& path, const GridState& field);
GridState read_snapshot(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace dkspde
