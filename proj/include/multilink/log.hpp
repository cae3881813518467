#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

// Minimal stderr logger.  Verbosity comes from the MULTILINK_LOG environment
// variable: error | warn | info | debug (default warn).
namespace multilink::mlog {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level& threshold() {
    static Level lvl = [] {
        const char* env = std::getenv("MULTILINK_LOG");
        if (!env) return Level::warn;
        if (!std::strcmp(env, "error")) return Level::error;
        if (!std::strcmp(env, "warn")) return Level::warn;
        if (!std::strcmp(env, "info")) return Level::info;
        if (!std::strcmp(env, "debug")) return Level::debug;
        return Level::warn;
    }();
    return lvl;
}

inline void write(Level lvl, const std::string& msg) {
    if (lvl > threshold()) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void error(const std::string& m) { write(Level::error, m); }
inline void warn(const std::string& m) { write(Level::warn, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void debug(const std::string& m) { write(Level::debug, m); }

}  // namespace multilink::mlog
