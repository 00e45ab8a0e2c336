/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "mgsim/log.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mgsim::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("MGSIM_LOG");
  if (!v) return Level::Warn;
  if (std::strcmp(v, "error") == 0) return Level::Error;
  if (std::strcmp(v, "warn") == 0) return Level::Warn;
  if (std::strcmp(v, "info") == 0) return Level::Info;
  if (std::strcmp(v, "debug") == 0) return Level::Debug;
  std::fprintf(stderr, "[warn] MGSIM_LOG=%s not recognized, using 'warn'\n", v);
  return Level::Warn;
}

Level g_threshold = parse_env();

const char* prefix(Level lv) {
  switch (lv) {
    case Level::Error: return "[error] ";
    case Level::Warn: return "[warn] ";
    case Level::Info: return "[info] ";
    case Level::Debug: return "[debug] ";
  }
  return "";
}

}  // namespace

Level threshold() { return g_threshold; }
void set_threshold(Level lv) { g_threshold = lv; }
bool enabled(Level lv) { return static_cast<int>(lv) <= static_cast<int>(g_threshold); }

void write(Level lv, const char* fmt, ...) {
  if (!enabled(lv)) return;
  std::fputs(prefix(lv), stderr);
  va_list ap;
  va_start(ap, fmt);
  std::vfprintf(stderr, fmt, ap);
  va_end(ap);
  std::fputc('\n', stderr);
}

}  // namespace mgsim::log
