// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <doctest.h>

#include "sflgame/error.hpp"

/// Checks that `expr` throws sflgame::Error carrying `want`.
#define CHECK_ERROR_CODE(expr, want)                               \
  do {                                                             \
    bool thrown_ = false;                                          \
    try {                                                          \
      (void)(expr);                                                \
    } catch (const sflgame::Error& e) {                            \
      thrown_ = true;                                              \
      CHECK_MESSAGE(e.code() == (want), "got " << e.what());       \
    }                                                              \
    CHECK_MESSAGE(thrown_, "expected an error from " #expr);       \
  } while (false)
