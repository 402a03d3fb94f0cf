#include "fedprov/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace fedprov::log {

namespace {

std::atomic<Level> g_level{Level::kWarning};
std::mutex g_mutex;

std::string_view tag(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarning: return "warning";
    case Level::kError: return "error";
    case Level::kOff: break;
  }
  return "";
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void write(Level level, std::string_view message) {
  if (level < g_level.load() || level == Level::kOff) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[fedprov " << tag(level) << "] " << message << '\n';
}

}  // namespace fedprov::log
