#pragma once

#include <functional>
#include <string>

namespace artdeform {

enum class LogLevel { Debug, Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink. The default writes warnings to stderr and drops the rest.
void set_log_sink(LogSink sink);
void log(LogLevel level, const std::string& message);

inline void log_warning(const std::string& message) { log(LogLevel::Warning, message); }
inline void log_info(const std::string& message) { log(LogLevel::Info, message); }

}  // namespace artdeform
