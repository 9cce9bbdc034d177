#pragma once

namespace pixinla {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pixinla
