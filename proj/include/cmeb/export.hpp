#pragma once

#include <string>

#include "cmeb/conic.hpp"
#include "cmeb/linprog.hpp"

namespace cmeb {

// SDPA sparse format (.dat-s), convention: min c^T x s.t. sum_i F_i x_i - F_0 >= 0.
// Equalities become paired +/- rows of a trailing diagonal block; comment headers
// record the pairing and the objective sense so read_sdpa can reverse both.
std::string to_sdpa(const ConicProgram& cp);
void write_sdpa(const ConicProgram& cp, const std::string& path);

ConicProgram read_sdpa(const std::string& text);
ConicProgram read_sdpa_file(const std::string& path);

// Fixed-field MPS. Ranged rows use the RANGES section; variable bounds map to
// FR/MI/LO/UP/FX entries. A Max objective emits an OBJSENSE section.
std::string to_mps(const LinearProgram& lp, const std::string& name = "CMEBLP");
void write_mps(const LinearProgram& lp, const std::string& path,
               const std::string& name = "CMEBLP");

}  // namespace cmeb
