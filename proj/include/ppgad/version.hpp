#pragma once

namespace ppgad {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ppgad
