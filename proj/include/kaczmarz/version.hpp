#pragma once

namespace kaczmarz {

// Library version, reported in benchmark metadata so result files are
// traceable to the code that produced them.
inline constexpr const char* library_version = "0.1.0";

}  // namespace kaczmarz
