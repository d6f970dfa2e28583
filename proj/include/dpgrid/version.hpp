#pragma once

namespace dpgrid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dpgrid
