#pragma once

namespace isachar {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace isachar
