#pragma once

namespace countpo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace countpo
