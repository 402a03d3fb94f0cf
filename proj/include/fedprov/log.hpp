#pragma once

#include <string_view>

namespace fedprov::log {

enum class Level { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kOff = 4 };

/// Messages below this level are dropped. Defaults to kWarning.
void set_level(Level level);
Level level();

void write(Level level, std::string_view message);

inline void info(std::string_view message) { write(Level::kInfo, message); }
inline void warn(std::string_view message) { write(Level::kWarning, message); }
inline void error(std::string_view message) { write(Level::kError, message); }

}  // namespace fedprov::log
