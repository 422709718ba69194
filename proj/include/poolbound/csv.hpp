#pragma once

#include <string>

namespace poolbound::cli {

/// Shortest representation that round-trips the exact double (std::to_chars).
std::string fmt(double v);
std::string fmt(unsigned long long v);

}  // namespace poolbound::cli
