#pragma once

#include <functional>
#include <string_view>

namespace hypolab {

enum class LogLevel { debug, info, warning, error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Process-wide diagnostics. The default sink writes warnings and errors to
// stderr; tests and the CLI swap it out.
void set_log_sink(LogSink sink);
void log_message(LogLevel level, std::string_view message);

inline void log_info(std::string_view m) { log_message(LogLevel::info, m); }
inline void log_warning(std::string_view m) { log_message(LogLevel::warning, m); }

}  // namespace hypolab
