#include "log.hpp"

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace stkm::log {

spdlog::logger &get() {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto l = spdlog::stderr_color_mt("stkm");
        l->set_pattern("[%H:%M:%S] [%^%l%$] %v");
        const char *env = std::getenv("STKM_LOG");
        l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
        return l;
    }();
    return *logger;
}

} // namespace stkm::log
