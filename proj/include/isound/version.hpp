#pragma once

#include <string_view>

namespace isound {

inline constexpr std::string_view kVersion = "0.1.0";

} // namespace isound
