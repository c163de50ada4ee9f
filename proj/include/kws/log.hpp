// Copyright (c) 2026 The tdnn-kws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace kws::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Verbosity comes from KWS_LOG (error|warn|info|debug or 0-3), default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("KWS_LOG");
    if (env == nullptr) return Level::kWarn;
    const std::string_view v(env);
    if (v == "error" || v == "0") return Level::kError;
    if (v == "info" || v == "2") return Level::kInfo;
    if (v == "debug" || v == "3") return Level::kDebug;
    return Level::kWarn;
  }();
  return level;
}

inline bool enabled(Level level) { return level <= threshold(); }

template <typename... Args>
void write(Level level, const Args&... args) {
  if (!enabled(level)) return;
  static constexpr const char* kTags[] = {"ERROR", "WARN", "INFO", "DEBUG"};
  std::cerr << "[kws " << kTags[static_cast<int>(level)] << "] ";
  (std::cerr << ... << args);
  std::cerr << '\n';
}

template <typename... Args>
void warn(const Args&... args) { write(Level::kWarn, args...); }

template <typename... Args>
void info(const Args&... args) { write(Level::kInfo, args...); }

template <typename... Args>
void debug(const Args&... args) { write(Level::kDebug, args...); }

}  // namespace kws::log
