#pragma once

#include <functional>
#include <string>

namespace socialforce::log {

enum class Level { Debug = 0, Info = 1, Warning = 2, Error = 3, Off = 4 };

using Sink = std::function<void(Level, const std::string&)>;

/// Messages below the threshold are dropped. Default: Warning, to stderr.
void set_level(Level level);
Level level();
/// Replaces the sink; an empty function restores the stderr sink.
void set_sink(Sink sink);

void write(Level level, const std::string& message);
inline void debug(const std::string& m) { write(Level::Debug, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void warning(const std::string& m) { write(Level::Warning, m); }
inline void error(const std::string& m) { write(Level::Error, m); }

const char* level_name(Level level);

}  // namespace socialforce::log
