#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mpmg/types.hpp"

namespace mpmg {

// Shortest text that parses back to exactly the same carrier value.
std::string format_real(real x);
real parse_real(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace mpmg
