#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mfgp::csv {

// Splits one CSV line on commas. No quoting support; the formats here never need it.
std::vector<std::string> split_line(std::string_view line);

// Strict decimal parse of the whole field (surrounding whitespace allowed).
// Returns false for empty or partially numeric fields. Accepts nan/inf so the
// caller can report them as non-finite.
bool parse_double(std::string_view field, double& out);
bool parse_int(std::string_view field, long& out);

// Shortest round-trip representation.
std::string format_double(double v);

}  // namespace mfgp::csv
