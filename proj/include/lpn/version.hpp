#pragma once

namespace lpn {

inline constexpr const char* kToolkitVersion = "lpn-toolkit 0.1.0";

}  // namespace lpn
