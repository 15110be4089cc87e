#pragma once

#include <string>

#include "jflow/scalar_field.hpp"

namespace jflow {

// Binary field dump:
//   magic "JFLB" | version u32 | mode u8 | ndims u8 | dims u32 each |
//   node values as little-endian float64, row-major.
inline constexpr std::uint32_t kFieldDumpVersion = 1;

void write_field_dump(const std::string& path, const ScalarField& field);
ScalarField read_field_dump(const std::string& path);

// Shortest round-trippable decimal form of a double, for deterministic
// CSV/JSON output.
std::string format_double(double v);

} // namespace jflow
