#pragma once

namespace rejopt {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace rejopt
