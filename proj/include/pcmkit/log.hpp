#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace pcmkit {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity comes from the PCMKIT_LOG environment variable
// (error|warn|info|debug); default is warn.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("PCMKIT_LOG");
    if (env == nullptr) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log(LogLevel lvl, const std::string& msg) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "pcmkit [%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void log_info(const std::string& msg) { log(LogLevel::Info, msg); }
inline void log_warn(const std::string& msg) { log(LogLevel::Warn, msg); }
inline void log_debug(const std::string& msg) { log(LogLevel::Debug, msg); }

}  // namespace pcmkit
