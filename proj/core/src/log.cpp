#include "saso/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace saso::log {
namespace {

std::atomic<int> g_level{static_cast<int>(Level::warn)};
std::atomic<int> g_warnings{0};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, std::string_view msg) {
  if (static_cast<int>(lvl) > g_level.load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[" << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level lvl) { g_level.store(static_cast<int>(lvl)); }
Level level() { return static_cast<Level>(g_level.load()); }

void warn(std::string_view msg) {
  ++g_warnings;
  emit(Level::warn, "warn", msg);
}
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }

int warning_count() { return g_warnings.load(); }
void reset_warning_count() { g_warnings.store(0); }

}  // namespace saso::log
