#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pipemdp {

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Standard alphabet with '=' padding. Throws FormatError on bad characters
/// or a length that is not a multiple of four.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace pipemdp
