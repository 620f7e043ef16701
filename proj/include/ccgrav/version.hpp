#pragma once

namespace ccgrav {

inline constexpr const char* version = "0.1.0";

}  // namespace ccgrav
