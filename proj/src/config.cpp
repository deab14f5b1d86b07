#include "bfc/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "bfc/math_util.hpp"

namespace bfc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_number(const std::string& s, const std::string& where) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw validation_error(where + ": not a number: '" + s + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
        ++pos;
    if (pos != s.size())
        throw validation_error(where + ": trailing characters after number: '" +
                               s + "'");
    return v;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

bernstein_spec parse_spec_text(const std::string& text,
                               const std::string& origin) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::optional<std::string> family, alpha_str, terms_str;
    std::string family_where, alpha_where, terms_where;

    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw validation_error(where + ": expected key=value, got '" + t +
                                   "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "family") {
            if (family)
                throw validation_error(where + ": duplicate key 'family'");
            family = value;
            family_where = where;
        } else if (key == "alpha") {
            if (alpha_str)
                throw validation_error(where + ": duplicate key 'alpha'");
            alpha_str = value;
            alpha_where = where;
        } else if (key == "terms") {
            if (terms_str)
                throw validation_error(where + ": duplicate key 'terms'");
            terms_str = value;
            terms_where = where;
        } else {
            throw validation_error(where + ": unknown key '" + key + "'");
        }
    }

    if (!family)
        throw validation_error(origin + ": missing required key 'family'");
    if (*family == "stable") {
        if (terms_str)
            throw validation_error(terms_where +
                                   ": key 'terms' is not valid for "
                                   "family=stable");
        if (!alpha_str)
            throw validation_error(origin +
                                   ": family=stable requires key 'alpha'");
        return bernstein_spec::stable(parse_number(*alpha_str, alpha_where));
    }
    if (*family == "mixture") {
        if (alpha_str)
            throw validation_error(alpha_where +
                                   ": key 'alpha' is not valid for "
                                   "family=mixture");
        if (!terms_str)
            throw validation_error(origin +
                                   ": family=mixture requires key 'terms'");
        std::vector<mixture_term> terms;
        std::istringstream ts(*terms_str);
        std::string item;
        while (std::getline(ts, item, ',')) {
            item = trim(item);
            const std::size_t colon = item.find(':');
            if (colon == std::string::npos)
                throw validation_error(terms_where +
                                       ": expected coefficient:alpha, got '" +
                                       item + "'");
            mixture_term term;
            term.c = parse_number(trim(item.substr(0, colon)), terms_where);
            term.alpha = parse_number(trim(item.substr(colon + 1)), terms_where);
            terms.push_back(term);
        }
        if (terms.empty())
            throw validation_error(terms_where + ": empty terms list");
        return bernstein_spec::mixture(std::move(terms));
    }
    throw validation_error(family_where + ": unknown family '" + *family +
                           "' (expected stable or mixture)");
}

bernstein_spec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw validation_error("cannot open spec file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str(), path);
}

std::string spec_to_text(const bernstein_spec& spec) {
    switch (spec.kind()) {
        case family_kind::stable:
            return "family=stable\nalpha=" +
                   format_full(spec.terms().front().alpha) + "\n";
        case family_kind::stable_mixture: {
            std::string out = "family=mixture\nterms=";
            bool first = true;
            for (const auto& t : spec.terms()) {
                if (!first) out += ',';
                out += format_full(t.c) + ":" + format_full(t.alpha);
                first = false;
            }
            return out + "\n";
        }
        case family_kind::custom_triplet:
            break;
    }
    throw validation_error(
        "spec_to_text: custom triplets carry callables and have no file form");
}

void run_config::validate() const {
    if (!(T > 0.0)) throw validation_error("config: T must be > 0");
    if (M < 8) throw validation_error("config: M must be >= 8");
    if (!(tol > 0.0)) throw validation_error("config: tol must be > 0");
    if (gamma > 0.0 && gamma < 1.0)
        throw validation_error("config: gamma must be >= 1 (or <= 0 for the "
                               "family default)");
    if (paths < 0) throw validation_error("config: paths must be >= 0");
    if (steps < 0) throw validation_error("config: steps must be >= 0");
    if (!(eps > 0.0)) throw validation_error("config: eps must be > 0");
    if (mode != "exact" && mode != "path")
        throw validation_error("config: mode must be 'exact' or 'path'");
}

std::string run_config::canonical() const {
    std::string spec_flat = spec_text;
    for (char& c : spec_flat)
        if (c == '\n') c = ';';
    std::ostringstream os;
    os << "command=" << command << ";spec=" << spec_flat
       << "T=" << format_full(T) << ";M=" << M
       << ";gamma=" << format_full(gamma) << ";tol=" << format_full(tol)
       << ";seed=" << seed << ";lambda=" << format_full(lambda)
       << ";dt=" << format_full(dt) << ";steps=" << steps
       << ";paths=" << paths << ";eps=" << format_full(eps)
       << ";floor=" << format_full(floor_delta) << ";x0=" << format_full(x0)
       << ";mode=" << mode << ";phi0=" << format_full(phi0)
       << ";g=" << g_csv;
    return os.str();
}

std::string config_fingerprint(const std::string& canonical) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

}  // namespace bfc
