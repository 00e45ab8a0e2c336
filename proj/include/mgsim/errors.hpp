/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <stdexcept>
#include <string>

namespace mgsim {

/* Bad user input: malformed scenario files, schema violations, invalid
 * parameter ranges. Maps to process exit code 2. */
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/* The model itself cannot be solved: infeasible power balances, solver
 * non-convergence, integration blow-up. Maps to process exit code 1. */
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mgsim
