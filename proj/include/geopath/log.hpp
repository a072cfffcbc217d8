#pragma once

#include <string>

namespace geopath {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Level comes from the GEOPATH_LOG env var (error|warn|info|debug), default warn.
LogLevel log_level();

void log_msg(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_msg(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::debug, msg); }

}  // namespace geopath
