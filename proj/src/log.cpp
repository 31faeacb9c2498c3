#include "telephone/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace telephone::log {
namespace {

std::mutex g_mutex;
std::atomic<Level> g_level{Level::info};

void stderr_sink(Level level, std::string_view message) {
  static constexpr std::string_view kNames[] = {"debug", "info", "warn", "error"};
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

Sink& sink() {
  static Sink s = stderr_sink;
  return s;
}

}  // namespace

Sink set_sink(Sink s) {
  std::lock_guard lock(g_mutex);
  Sink previous = std::move(sink());
  sink() = s ? std::move(s) : Sink(stderr_sink);
  return previous;
}

void set_level(Level level) { g_level = level; }

void write(Level level, std::string_view message) {
  if (level < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  sink()(level, message);
}

}  // namespace telephone::log
