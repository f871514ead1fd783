// Copyright 2026 The PVC Authors
// Minimal leveled logging controlled by PVC_LOG_LEVEL={error,info,debug}.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

namespace pvc {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("PVC_LOG_LEVEL");
    if (env != nullptr) {
      if (std::strcmp(env, "error") == 0) return LogLevel::kError;
      if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    }
    return LogLevel::kInfo;
  }();
  return level;
}

inline void log_error(const std::string& msg) {
  std::cerr << "[pvc error] " << msg << "\n";
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[pvc] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug)
    std::cerr << "[pvc debug] " << msg << "\n";
}

}  // namespace pvc
