#include "flmc/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace flmc::log {

namespace {
std::atomic<Level> g_level{Level::warn};
std::mutex g_mutex;

void emit(const char* tag, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::cerr << "[flmc " << tag << "] " << message << '\n';
}
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void warn(std::string_view message) {
  if (g_level >= Level::warn) emit("warn", message);
}

void info(std::string_view message) {
  if (g_level >= Level::info) emit("info", message);
}

}  // namespace flmc::log
