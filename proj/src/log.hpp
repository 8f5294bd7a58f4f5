#pragma once

// Internal logging front end. Verbosity comes from STKM_LOG
// (trace, debug, info, warn, error, off); default is warn.

#include <spdlog/spdlog.h>

namespace stkm::log {

spdlog::logger &get();

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args &&...args) {
    get().debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args &&...args) {
    get().info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args &&...args) {
    get().warn(fmt, std::forward<Args>(args)...);
}

} // namespace stkm::log
