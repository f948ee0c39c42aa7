#pragma once

#include <string>

namespace twophase {

/// Shortest round-trip decimal form of `value` ("inf", "-inf", "nan" for
/// non-finite). Locale-independent, so CSV output is byte-stable.
std::string format_double(double value);

}  // namespace twophase
