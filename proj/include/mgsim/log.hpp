/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <string>

namespace mgsim::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold comes from the MGSIM_LOG environment variable
// (error|warn|info|debug); unset or unrecognized values mean "warn".
Level threshold();
void set_threshold(Level lv);

bool enabled(Level lv);

// printf-style, written to stderr with a level prefix.
void write(Level lv, const char* fmt, ...) __attribute__((format(printf, 2, 3)));

#define MGSIM_LOG_AT(lv, ...)                      \
  do {                                             \
    if (::mgsim::log::enabled(lv)) ::mgsim::log::write(lv, __VA_ARGS__); \
  } while (0)

#define LOG_ERROR(...) MGSIM_LOG_AT(::mgsim::log::Level::Error, __VA_ARGS__)
#define LOG_WARN(...) MGSIM_LOG_AT(::mgsim::log::Level::Warn, __VA_ARGS__)
#define LOG_INFO(...) MGSIM_LOG_AT(::mgsim::log::Level::Info, __VA_ARGS__)
#define LOG_DEBUG(...) MGSIM_LOG_AT(::mgsim::log::Level::Debug, __VA_ARGS__)

}  // namespace mgsim::log
