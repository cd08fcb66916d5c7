#pragma once

namespace profs {

inline constexpr const char kVersion[] = "0.1.0";

}  // namespace profs
