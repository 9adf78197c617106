#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace pipemdp {

/// Severity levels ordered from pristine to failed. Stored as 0-based
/// indices: level 1 -> 0, ..., level 5 -> 4, F -> 5.
enum class Severity : std::uint8_t { S1 = 0, S2, S3, S4, S5, F };

inline constexpr int kStates = 6;
inline constexpr int kFailed = 5;

using SeverityVector = std::array<double, kStates>;
using SeverityCounts = std::array<int, kStates>;

constexpr int index_of(Severity s) { return static_cast<int>(s); }

inline constexpr std::array<std::string_view, kStates> kStateNames = {"1", "2", "3", "4", "5", "F"};

}  // namespace pipemdp
