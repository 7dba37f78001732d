#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace mvrec {

// FNV-1a 64-bit hash; used for config and manifest fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal formatting ("%.17g" trimmed via %g rules).
std::string format_double(double v);

// RFC-4180 field quoting: wraps in quotes when the field contains a
// comma, quote, CR or LF; embedded quotes are doubled.
std::string csv_field(std::string_view s);

// Static-partition parallel loop. Each index runs exactly once; results
// must be written to per-index slots so the outcome is independent of
// scheduling. jobs <= 1 runs inline.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace mvrec
