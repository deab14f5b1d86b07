#pragma once

#include <cstdint>
#include <string>

#include "bfc/bernstein.hpp"

namespace bfc {

/// Strict parser for the flat key=value Bernstein-family spec format:
///
///   family=stable          family=mixture
///   alpha=0.5              terms=1:0.3,1:0.7
///
/// Blank lines and lines starting with '#' are ignored.  Unknown keys,
/// duplicate keys, malformed numbers, and missing required keys are
/// validation errors carrying `origin:line` positions, so a CLI run fails
/// loudly instead of silently dropping a typoed tolerance-critical knob.
/// Custom triplets are construction-only (they carry callables) and have no
/// file form.
bernstein_spec parse_spec_text(const std::string& text,
                               const std::string& origin = "spec");
bernstein_spec load_spec_file(const std::string& path);

/// Canonical serialization of a stable/mixture spec; parse_spec_text on the
/// result reproduces the spec exactly (numbers printed round-trip safe).
std::string spec_to_text(const bernstein_spec& spec);

/// Grouped parameters of one CLI invocation.  The struct is filled by the
/// command-line front end, validated once, and echoed canonically into every
/// output file (hashed) so artifacts are traceable to their exact inputs.
struct run_config {
    std::string command;
    std::string spec_path;
    std::string spec_text;  ///< canonical form of the loaded spec

    double T = 1.0;         ///< grid horizon
    int M = 256;            ///< cell count
    double gamma = 0.0;     ///< grading exponent; <= 0 picks the family default
    double tol = 1e-8;
    std::uint64_t seed = 1;

    // command-specific knobs (unused ones keep their defaults)
    double lambda = 0.0;    ///< resolve / lifetime-lt
    double dt = 0.0;        ///< evolve
    int steps = 0;          ///< evolve
    long paths = 0;         ///< simulate / compare
    double eps = 1e-4;      ///< simulate, path mode
    double floor_delta = 0.0;  ///< simulate; <= 0 picks the engine default
    double x0 = 0.0;        ///< simulate / compare / lifetime-lt
    std::string mode = "exact";  ///< simulate: exact | path
    double phi0 = 0.0;      ///< solve-ivp / resolve initial value
    std::string g_csv;      ///< data CSV for g (empty: g = 0)
    std::string out;        ///< output file (empty: stdout)

    /// T > 0, M >= 8, tol > 0, mode well-formed, counts nonnegative.
    void validate() const;
    /// Stable one-line echo of every field, for fingerprinting and headers.
    std::string canonical() const;
};

/// 16-hex-digit FNV-1a fingerprint of a canonical config string.
std::string config_fingerprint(const std::string& canonical);

}  // namespace bfc
