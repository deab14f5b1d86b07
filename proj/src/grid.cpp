#include "bfc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "bfc/math_util.hpp"

namespace bfc {

grid_function::grid_function(std::vector<double> nodes, std::vector<double> vals, double grading)
    : x(std::move(nodes)), value(std::move(vals)), gamma(grading) {
    if (x.size() < 2) throw validation_error("grid_function: need at least 2 nodes");
    if (x.size() != value.size())
        throw validation_error("grid_function: node/value size mismatch");
    if (x.front() < 0.0) throw validation_error("grid_function: grid must start at x >= 0");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            throw validation_error("grid_function: grid must be strictly increasing");
}

double grid_function::operator()(double xq) const {
    const std::size_t lo = defined_from;
    if (xq <= x[lo]) return value[lo];
    if (xq >= x.back()) return value.back();
    const auto it = std::upper_bound(x.begin() + static_cast<std::ptrdiff_t>(lo), x.end(), xq);
    const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    const double t = (xq - x[i]) / (x[i + 1] - x[i]);
    return value[i] + t * (value[i + 1] - value[i]);
}

void grid_function::require_fully_defined(const char* who) const {
    if (defined_from != 0)
        throw validation_error(std::string(who) +
                               ": grid function has undefined leading values "
                               "(derivative-type data); fill or restrict first");
}

double grid_function::sup_norm() const {
    double m = 0.0;
    for (std::size_t i = defined_from; i < value.size(); ++i)
        m = std::max(m, std::abs(value[i]));
    return m;
}

std::vector<double> graded_nodes(double T, std::size_t M, double gamma) {
    if (!(T > 0)) throw validation_error("graded_nodes: T must be positive");
    if (M < 8) throw validation_error("graded_nodes: need M >= 8 cells");
    if (!(gamma >= 1.0)) throw validation_error("graded_nodes: gamma must be >= 1");
    std::vector<double> xs(M + 1);
    for (std::size_t j = 0; j <= M; ++j)
        xs[j] = T * std::pow(static_cast<double>(j) / static_cast<double>(M), gamma);
    xs[M] = T;  // exact endpoint
    return xs;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

static void write_double(std::ostream& os, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    os.write(buf, n);
}

void write_csv(std::ostream& os, const grid_function& gf,
               const std::vector<std::string>& header_comments,
               const std::vector<std::string>& footer_comments) {
    for (const auto& c : header_comments) os << "# " << c << "\n";
    os << "x,value\n";
    for (std::size_t i = 0; i < gf.x.size(); ++i) {
        write_double(os, gf.x[i]);
        os << ',';
        if (i >= gf.defined_from) write_double(os, gf.value[i]);
        os << '\n';
    }
    for (const auto& c : footer_comments) os << "# " << c << "\n";
}

grid_function read_csv(std::istream& is) {
    std::vector<double> xs, vs;
    std::size_t defined_from = 0;
    bool saw_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            // tolerate but do not require the "x,value" column header
            saw_header = true;
            if (line.rfind("x,", 0) == 0) continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw validation_error("csv line " + std::to_string(line_no) + ": expected 'x,value'");
        const std::string xs_str = line.substr(0, comma);
        const std::string vs_str = line.substr(comma + 1);
        double xv = 0.0;
        auto [p1, e1] = std::from_chars(xs_str.data(), xs_str.data() + xs_str.size(), xv);
        if (e1 != std::errc{} || p1 != xs_str.data() + xs_str.size())
            throw validation_error("csv line " + std::to_string(line_no) + ": bad x value '" +
                                   xs_str + "'");
        xs.push_back(xv);
        if (vs_str.empty()) {
            if (!vs.empty() && vs.size() != defined_from)
                throw validation_error("csv line " + std::to_string(line_no) +
                                       ": undefined value after defined values");
            vs.push_back(std::numeric_limits<double>::quiet_NaN());
            defined_from = vs.size();
        } else {
            double vv = 0.0;
            auto [p2, e2] = std::from_chars(vs_str.data(), vs_str.data() + vs_str.size(), vv);
            if (e2 != std::errc{} || p2 != vs_str.data() + vs_str.size())
                throw validation_error("csv line " + std::to_string(line_no) + ": bad value '" +
                                       vs_str + "'");
            vs.push_back(vv);
        }
    }
    if (xs.size() < 2) throw validation_error("csv: fewer than two data rows");
    grid_function gf(std::move(xs), std::move(vs));
    gf.defined_from = defined_from;
    return gf;
}

grid_function read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw validation_error("cannot open CSV file: " + path);
    return read_csv(f);
}

void write_csv_file(const std::string& path, const grid_function& gf,
                    const std::vector<std::string>& header_comments,
                    const std::vector<std::string>& footer_comments) {
    std::ofstream f(path);
    if (!f) throw validation_error("cannot write CSV file: " + path);
    write_csv(f, gf, header_comments, footer_comments);
}

} // namespace bfc
