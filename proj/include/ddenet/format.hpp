#pragma once

// Round-trip-exact decimal emission shared by CSV writers and report summaries.

#include <fmt/format.h>

#include <string>

namespace ddenet {

/// 17 significant digits: parses back to the identical double.
inline std::string format_real(double value) { return fmt::format("{:.17g}", value); }

}  // namespace ddenet
