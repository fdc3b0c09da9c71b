#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace acs {

/// Splits an identifier on separators, lower/upper camel boundaries and digit
/// runs; tokens are lowercased. `open_file` and `openFile` give [open, file].
std::vector<std::string> subtokenize_name(std::string_view name);

} // namespace acs
