#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "bfc/errors.hpp"

namespace bfc {

/// A function sampled on a strictly increasing grid on [x_0, T], with linear
/// interpolation between nodes.  Operators in this library are exact on such
/// piecewise-linear data, so the grid *is* the discretization.
///
/// `defined_from`: index of the first node carrying a defined value.
/// Derivative-type operators cannot produce a value at x = 0 (the Lévy tail
/// diverges there), so they return defined_from = 1 with value[0] = NaN;
/// CSV output writes those entries as empty fields.
struct grid_function {
    std::vector<double> x;       ///< nodes, strictly increasing, x.front() >= 0
    std::vector<double> value;   ///< one value per node
    double gamma = 0.0;          ///< grading exponent metadata (0 = unknown/custom)
    std::size_t defined_from = 0;

    grid_function() = default;
    grid_function(std::vector<double> nodes, std::vector<double> vals, double grading = 0.0);

    std::size_t nodes() const { return x.size(); }
    double T() const { return x.back(); }

    /// Piecewise-linear interpolation; clamps outside [x.front(), x.back()].
    double operator()(double xq) const;

    /// Throws unless values are defined from node 0 (needed by transforms).
    void require_fully_defined(const char* who) const;

    double sup_norm() const;  ///< max |value| over defined nodes
};

/// Graded mesh x_j = T (j/M)^gamma, j = 0..M.  M is the number of cells
/// (M+1 nodes); M >= 8 required.  gamma >= 1; gamma = 1 is uniform.
std::vector<double> graded_nodes(double T, std::size_t M, double gamma);

/// Convenience: grid_function sampling `f` on a graded mesh.
template <class F>
grid_function sample_on_grid(F&& f, double T, std::size_t M, double gamma) {
    std::vector<double> xs = graded_nodes(T, M, gamma);
    std::vector<double> vs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) vs[i] = f(xs[i]);
    return grid_function(std::move(xs), std::move(vs), gamma);
}

/// CSV I/O.  Format: optional '#'-prefixed comment header lines, then a
/// `x,value` column header, then one row per node.  Undefined leading values
/// (see grid_function::defined_from) are written as empty fields.
void write_csv(std::ostream& os, const grid_function& gf,
               const std::vector<std::string>& header_comments = {},
               const std::vector<std::string>& footer_comments = {});
grid_function read_csv(std::istream& is);
grid_function read_csv_file(const std::string& path);
void write_csv_file(const std::string& path, const grid_function& gf,
                    const std::vector<std::string>& header_comments = {},
                    const std::vector<std::string>& footer_comments = {});

} // namespace bfc
