#pragma once

#include <string>

namespace survcobra {

// Shortest round-trip decimal form of a double (to_chars), so written files
// reload bit for bit and identical runs produce identical bytes.
std::string format_double(double v);

// Fixed-precision form for human-facing tables.
std::string format_fixed(double v, int digits);

// Writes via a temp file in the same directory plus rename, so interrupted
// runs never leave a truncated report.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace survcobra
