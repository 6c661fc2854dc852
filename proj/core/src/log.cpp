#include "socialforce/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace socialforce::log {

namespace {
std::atomic<Level> g_level{Level::Warning};
std::mutex g_mutex;
Sink g_sink;
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

const char* level_name(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warning: return "warning";
    case Level::Error: return "error";
    case Level::Off: return "off";
  }
  return "?";
}

void write(Level level, const std::string& message) {
  if (level < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(level, message);
  } else {
    std::cerr << "[" << level_name(level) << "] " << message << '\n';
  }
}

}  // namespace socialforce::log
