/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <iosfwd>
#include <string>

#include "mgsim/engine.hpp"
#include "mgsim/validation.hpp"

namespace mgsim {

// Parse and fully validate a scenario file. All diagnostics carry the JSON
// path of the offending element (e.g. "lines[0].to"); unknown keys are
// rejected. Numeric keys are unit-suffixed SI.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text,
                             const std::string& source);

// Canonical JSON form: every field written explicitly, stable key order.
// parse(serialize(parse(x))) == parse(x).
std::string serialize_scenario(const Scenario& sc);

// One number, 12 significant digits, locale-independent.
std::string format_csv_value(double v);

// Header row, then the unit row as a '#' comment, then data rows.
void write_trajectory_csv(std::ostream& os, const SimulationOutput& out);

// Equilibrium table: node,V,delta,P,Q,omega_s.
void write_powerflow_table(std::ostream& os, const Scenario& sc,
                           const Equilibrium& eq);

// Validation reports, human-readable and machine-readable.
void write_validation_text(std::ostream& os, const ValidationBundle& b);
void write_validation_csv(std::ostream& os, const ValidationBundle& b);

}  // namespace mgsim
