#ifndef DJM_CLI_HPP
#define DJM_CLI_HPP

// Command-line front end. Everything except process startup lives here so
// the commands can be driven from tests with string streams.
//
// Settings are flat key = value pairs (config file, then flags). Values are
// kept as the decimal strings the user wrote and parsed only after the
// working precision is installed, so no parameter goes through a double.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "djm/algebra.hpp"
#include "djm/boussinesq.hpp"
#include "djm/iterate.hpp"
#include "djm/oracle.hpp"
#include "djm/precision.hpp"

namespace djm::cli
{

enum exit_code : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_calibration = 3 };

class config_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> &commands()
{
    static const std::vector<std::string> names{"series", "table", "compare", "residual", "plotdata"};
    return names;
}

/// Every recognized setting, in the order parameters are echoed.
inline const std::vector<std::string> &known_keys()
{
    static const std::vector<std::string> keys{
        "command", "problem",   "c",      "ut",     "p",         "q",         "r",      "alpha",
        "beta",    "sign",      "amplitude-sign", "amplitude", "method", "terms", "digits",
        "x",       "t",         "reference", "target", "basis",  "format",    "significant"};
    return keys;
}

namespace detail
{

inline std::string trim(const std::string &s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        out.push_back(trim(cur));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

} // namespace detail

struct run_config {
    std::map<std::string, std::string> values;
    /// Output path; empty writes to the caller's stream.
    std::string out;

    void set(const std::string &key, const std::string &value)
    {
        if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
            throw config_error("unknown setting '" + key + "'");
        }
        values[key] = detail::trim(value);
    }

    bool has(const std::string &key) const
    {
        return values.count(key) != 0;
    }

    std::string command() const
    {
        return get("command");
    }

    /// Value as given, or the default for the current command and problem.
    std::string get(const std::string &key) const
    {
        if (auto it = values.find(key); it != values.end()) {
            return it->second;
        }
        const auto cmd = values.count("command") ? values.at("command") : std::string();
        static const std::map<std::string, std::string> fixed{
            {"problem", "example1"}, {"c", "1"},         {"ut", "consistent"}, {"p", "-1"},
            {"q", "3"},              {"r", "-1"},        {"alpha", "2"},       {"beta", "0"},
            {"sign", "1"},           {"amplitude-sign", "1"}, {"amplitude", "printed"},
            {"method", "mdjm"},      {"terms", "4"},     {"reference", "calibrated"},
            {"target", "reference"}, {"basis", "reduced"}, {"format", "csv"},  {"significant", "0"}};
        if (auto it = fixed.find(key); it != fixed.end()) {
            return it->second;
        }
        if (key == "x") {
            return cmd == "plotdata" ? "-10:10:0.5" : "20:40:5";
        }
        if (key == "t") {
            return cmd == "plotdata" ? "1" : "0.1:1:0.1";
        }
        if (key == "digits") {
            try {
                return std::to_string(digits_from_environment());
            } catch (const std::invalid_argument &e) {
                throw config_error(e.what());
            }
        }
        throw config_error("no value for '" + key + "'");
    }

    /// Settings that affect the output of the current command.
    std::vector<std::string> relevant_keys() const
    {
        std::vector<std::string> keys{"command", "problem"};
        if (get("problem") == "example1") {
            keys.insert(keys.end(), {"c", "ut"});
        } else {
            keys.insert(keys.end(), {"p", "q", "r", "alpha", "beta", "sign", "amplitude-sign", "amplitude"});
        }
        const auto cmd = command();
        if (cmd != "compare") {
            keys.push_back("method");
        }
        keys.insert(keys.end(), {"terms", "digits"});
        if (cmd != "series") {
            keys.insert(keys.end(), {"x", "t", "reference"});
        }
        if (cmd == "residual") {
            keys.push_back("target");
        }
        keys.insert(keys.end(), {"basis", "format", "significant"});
        return keys;
    }
};

/// Parses flat "key = value" text. Blank lines and lines starting with '#'
/// are skipped unless `preamble` is set, in which case only "# key = value"
/// lines are read (the parameter echo of an output file).
inline void parse_key_values(std::istream &in, run_config &cfg, bool preamble = false)
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (preamble) {
            if (s.rfind("<!--", 0) == 0 && s.size() >= 7 && s.compare(s.size() - 3, 3, "-->") == 0) {
                s = detail::trim(s.substr(4, s.size() - 7));
            } else if (s.rfind("#", 0) == 0) {
                s = detail::trim(s.substr(1));
            } else {
                continue;
            }
            const auto eq = s.find(" = ");
            if (eq == std::string::npos) {
                continue;
            }
            const auto key = detail::trim(s.substr(0, eq));
            if (std::find(known_keys().begin(), known_keys().end(), key) != known_keys().end()) {
                cfg.set(key, s.substr(eq + 3));
            }
            continue;
        }
        if (s.empty() || s[0] == '#') {
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        cfg.set(detail::trim(s.substr(0, eq)), s.substr(eq + 1));
    }
}

inline void load_config_file(const std::string &path, run_config &cfg)
{
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot read config file '" + path + "'");
    }
    parse_key_values(in, cfg);
}

inline real parse_number(const std::string &key, const std::string &text)
{
    try {
        return parse_real(text);
    } catch (const std::invalid_argument &) {
        throw config_error("'" + key + "': not a number: '" + text + "'");
    }
}

inline long parse_integer(const std::string &key, const std::string &text)
{
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(text, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw config_error("'" + key + "': not an integer: '" + text + "'");
    }
    return v;
}

/// Comma list of numbers and/or start:stop:step ranges (stop included).
inline std::vector<real> parse_grid(const std::string &key, const std::string &text)
{
    std::vector<real> out;
    for (const auto &item : detail::split(text, ',')) {
        if (item.empty()) {
            throw config_error("'" + key + "': empty grid entry");
        }
        const auto parts = detail::split(item, ':');
        if (parts.size() == 1) {
            out.push_back(parse_number(key, parts[0]));
            continue;
        }
        if (parts.size() != 3) {
            throw config_error("'" + key + "': ranges are start:stop:step");
        }
        const real start = parse_number(key, parts[0]);
        const real stop = parse_number(key, parts[1]);
        const real step = parse_number(key, parts[2]);
        if (!(step > 0) || stop < start) {
            throw config_error("'" + key + "': range needs step > 0 and stop >= start");
        }
        const real count = floor((stop - start) / step + real("1e-9"));
        if (count > 100000) {
            throw config_error("'" + key + "': range too long");
        }
        const long n = count.convert_to<long>();
        for (long i = 0; i <= n; ++i) {
            out.push_back(start + i * step);
        }
    }
    if (out.empty()) {
        throw config_error("'" + key + "': empty grid");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resolved settings

struct resolved {
    std::string command;
    boussinesq_problem problem;
    bool example1 = true;
    real c;
    method meth = method::mdjm;
    std::size_t terms = 4;
    unsigned digits = default_digits;
    std::vector<real> xs;
    std::vector<real> ts;
    std::string reference;
    std::string target;
    bool markdown = false;
    std::streamsize significant = 0;
};

inline int parse_sign(const std::string &key, const std::string &text)
{
    if (text == "1" || text == "+1" || text == "+") {
        return 1;
    }
    if (text == "-1" || text == "-") {
        return -1;
    }
    throw config_error("'" + key + "' must be +1 or -1");
}

inline tanh_basis parse_basis(const std::string &text)
{
    if (text == "reduced") {
        return tanh_basis::reduced;
    }
    if (text == "product_rule") {
        return tanh_basis::product_rule;
    }
    throw config_error("'basis' must be reduced or product_rule");
}

inline boussinesq_problem build_problem(const run_config &cfg, real &c, bool &example1)
{
    const auto basis = parse_basis(cfg.get("basis"));
    const auto problem = cfg.get("problem");
    try {
        if (problem == "example1") {
            example1 = true;
            c = parse_number("c", cfg.get("c"));
            const auto ut = cfg.get("ut");
            if (ut != "consistent" && ut != "printed") {
                throw config_error("'ut' must be consistent or printed");
            }
            return build_example1({c, ut == "printed" ? initial_velocity::printed : initial_velocity::consistent},
                                  basis);
        }
        if (problem == "general") {
            example1 = false;
            const boussinesq_params prm{parse_number("p", cfg.get("p")), parse_number("q", cfg.get("q")),
                                        parse_number("r", cfg.get("r"))};
            const auto form = cfg.get("amplitude");
            if (form != "printed" && form != "solitary") {
                throw config_error("'amplitude' must be printed or solitary");
            }
            const solitary_wave_params wave{parse_number("alpha", cfg.get("alpha")),
                                            parse_number("beta", cfg.get("beta")), parse_sign("sign", cfg.get("sign")),
                                            parse_sign("amplitude-sign", cfg.get("amplitude-sign")),
                                            form == "printed" ? amplitude_form::printed : amplitude_form::solitary};
            return build_general(prm, wave, basis);
        }
    } catch (const std::domain_error &e) {
        throw config_error(e.what());
    } catch (const std::invalid_argument &e) {
        throw config_error(e.what());
    }
    throw config_error("'problem' must be example1 or general");
}

/// Largest series length the symbolic build handles in memory. Each plain
/// term is roughly five times the size of the previous one and costs twenty
/// times as much; the modified method runs one term behind.
inline std::size_t max_terms(method m)
{
    return m == method::djm ? 7 : 8;
}

/// Must run with the working precision already installed.
inline resolved resolve(const run_config &cfg)
{
    real c = 0;
    bool example1 = true;
    auto problem = build_problem(cfg, c, example1);
    resolved r{cfg.command(), std::move(problem), example1, std::move(c)};

    const auto m = cfg.get("method");
    if (m != "djm" && m != "mdjm") {
        throw config_error("'method' must be djm or mdjm");
    }
    r.meth = m == "djm" ? method::djm : method::mdjm;
    const long terms = parse_integer("terms", cfg.get("terms"));
    const std::size_t cap = cfg.command() == "compare" ? max_terms(method::djm) : max_terms(r.meth);
    if (terms < 1 || static_cast<std::size_t>(terms) > cap) {
        throw config_error("'terms' must be between 1 and " + std::to_string(cap) + " here");
    }
    r.terms = static_cast<std::size_t>(terms);
    r.digits = current_precision().digits;
    r.xs = parse_grid("x", cfg.get("x"));
    r.ts = parse_grid("t", cfg.get("t"));
    for (const auto &t : r.ts) {
        if (t < 0) {
            throw config_error("'t' values must be >= 0");
        }
    }
    r.reference = cfg.get("reference");
    r.target = cfg.get("target");
    if (r.target != "reference" && r.target != "series" && r.target != "zero") {
        throw config_error("'target' must be reference, series or zero");
    }
    const auto fmt = cfg.get("format");
    if (fmt != "csv" && fmt != "markdown") {
        throw config_error("'format' must be csv or markdown");
    }
    r.markdown = fmt == "markdown";
    const long sig = parse_integer("significant", cfg.get("significant"));
    if (sig < 0) {
        throw config_error("'significant' must be >= 0");
    }
    r.significant = sig;
    return r;
}

// ---------------------------------------------------------------------------
// Output helpers

class writer
{
public:
    writer(std::ostream &os, bool markdown, std::streamsize significant)
        : os_(os), markdown_(markdown), significant_(significant)
    {
    }

    void note(const std::string &text)
    {
        if (markdown_) {
            os_ << "<!-- " << text << " -->\n";
        } else {
            os_ << "# " << text << "\n";
        }
    }

    void header(const std::vector<std::string> &cols)
    {
        if (markdown_) {
            os_ << "\n|";
            for (const auto &c : cols) {
                os_ << " " << c << " |";
            }
            os_ << "\n|";
            for (std::size_t i = 0; i < cols.size(); ++i) {
                os_ << "---|";
            }
            os_ << "\n";
        } else {
            for (std::size_t i = 0; i < cols.size(); ++i) {
                os_ << (i ? "," : "") << cols[i];
            }
            os_ << "\n";
        }
    }

    void row(const std::vector<std::string> &cells)
    {
        if (markdown_) {
            os_ << "|";
            for (const auto &c : cells) {
                os_ << " " << c << " |";
            }
        } else {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                os_ << (i ? "," : "") << cells[i];
            }
        }
        os_ << "\n";
    }

    std::string value(const real &v) const
    {
        if (isinf(v)) {
            return v > 0 ? "inf" : "-inf";
        }
        return significant_ == 0 ? format_shortest(v) : format_sci(v, significant_);
    }

    /// Grid coordinates in plain decimal, as short as the value allows.
    static std::string coord(const real &v)
    {
        return v.str(static_cast<std::streamsize>(current_precision().digits / 2), std::ios_base::fmtflags(0));
    }

private:
    std::ostream &os_;
    bool markdown_;
    std::streamsize significant_;
};

inline void echo_parameters(writer &w, const run_config &cfg)
{
    for (const auto &key : cfg.relevant_keys()) {
        w.note(key + " = " + cfg.get(key));
    }
}

inline std::string yes_no(bool b)
{
    return b ? "yes" : "no";
}

struct chosen_reference {
    reference_solution ref;
    std::vector<candidate_report> candidates;
};

inline chosen_reference resolve_reference(const resolved &r)
{
    auto settings = calibration_settings::defaults();
    real tmax = 0;
    for (const auto &t : r.ts) {
        tmax = std::max(tmax, t);
    }
    settings.t_end = std::max(1.0, tmax.convert_to<double>()) + 0.3;

    chosen_reference out;
    const auto &name = r.reference;
    if (name == "calibrated") {
        auto cal = r.example1 ? calibrate_reference(r.problem, example1_candidates(r.problem, r.c, settings), settings)
                              : reference_general(r.problem, settings);
        out.ref = std::move(cal.reference);
        out.candidates = std::move(cal.candidates);
        return out;
    }
    if (name == "numeric") {
        auto cal = calibrate_reference(r.problem, {}, settings);
        out.ref = std::move(cal.reference);
        out.candidates = std::move(cal.candidates);
        return out;
    }
    if (!r.example1) {
        if (name != "travelling-wave") {
            throw config_error("'reference' for the general problem: calibrated, numeric or travelling-wave");
        }
        out.ref = travelling_wave_reading(r.problem);
    } else {
        const auto &names = example1_reading_names();
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw config_error("unknown reference '" + name + "'");
        }
        if (name == "linear-fit") {
            out.ref = example1_candidates(r.problem, r.c, settings).back();
        } else {
            out.ref = example1_reading(r.c, name);
        }
    }
    out.ref.provenance += " (forced)";
    return out;
}

inline void echo_reference(writer &w, const chosen_reference &ref)
{
    w.note("provenance = " + ref.ref.provenance);
    for (const auto &c : ref.candidates) {
        w.note("candidate " + c.reading + ": ic_value_error " + format_sci(c.ic_value_error, 3) +
               ", ic_velocity_error " + format_sci(c.ic_velocity_error, 3) + ", residual " +
               format_sci(c.max_residual, 3) + ", tolerance " + format_sci(c.tolerance, 3) +
               ", pass " + yes_no(c.passes()));
    }
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_series(const run_config &cfg, const resolved &r, std::ostream &os)
{
    writer w(os, r.markdown, r.significant);
    echo_parameters(w, cfg);
    const auto sol = run_method(r.meth, r.problem.problem, r.terms);
    w.header({"term", "coef", "k", "m", "n"});
    for (std::size_t i = 0; i < sol.size(); ++i) {
        for (const auto &mo : sol.term(i).terms()) {
            w.row({std::to_string(i), w.value(mo.coef), std::to_string(mo.k), std::to_string(mo.m),
                   std::to_string(mo.n)});
        }
    }
    for (std::size_t i = 0; i < sol.size(); ++i) {
        w.note("u" + std::to_string(i) + " = " + to_string(sol.term(i), 12));
    }
    return exit_ok;
}

inline int cmd_table(const run_config &cfg, const resolved &r, std::ostream &os)
{
    writer w(os, r.markdown, r.significant);
    echo_parameters(w, cfg);
    const auto ref = resolve_reference(r);
    echo_reference(w, ref);
    const auto sol = run_method(r.meth, r.problem.problem, r.terms);
    const auto rows = error_table(sol.partial_sums().back(), ref.ref.evaluate, r.xs, r.ts);
    w.header({"x", "t", "approx", "reference", "abs_error"});
    for (const auto &row : rows) {
        w.row({writer::coord(row.x), writer::coord(row.t), w.value(row.approx), w.value(row.reference),
               w.value(row.abs_error)});
    }
    return exit_ok;
}

inline int cmd_plotdata(const run_config &cfg, const resolved &r, std::ostream &os)
{
    writer w(os, r.markdown, r.significant);
    echo_parameters(w, cfg);
    const auto ref = resolve_reference(r);
    echo_reference(w, ref);
    const auto sol = run_method(r.meth, r.problem.problem, r.terms);
    for (const auto &t : r.ts) {
        if (r.ts.size() > 1) {
            w.note("t = " + writer::coord(t));
        }
        w.header({"x", "approx", "reference"});
        for (const auto &smp : figure_data(sol.partial_sums().back(), ref.ref.evaluate, r.xs, t)) {
            w.row({writer::coord(smp.x), w.value(smp.approx), w.value(smp.reference)});
        }
    }
    return exit_ok;
}

inline real error_ratio(const real &djm_err, const real &mdjm_err)
{
    if (mdjm_err == 0) {
        return djm_err == 0 ? real(1) : std::numeric_limits<real>::infinity();
    }
    return djm_err / mdjm_err;
}

/// Smallest term count whose partial sum is within `target` of the reference
/// at (x, t), among the terms of `sol`.
inline std::optional<std::size_t> terms_to_reach(const series_solution<expr> &sol, const evaluator &ref, const real &x,
                                                 const real &t, const real &target)
{
    const real want = ref(x, t);
    for (std::size_t i = 0; i < sol.size(); ++i) {
        if (abs(eval(sol.partial_sum(i), x, t) - want) < target) {
            return i + 1;
        }
    }
    return std::nullopt;
}

inline int cmd_compare(const run_config &cfg, const resolved &r, std::ostream &os)
{
    writer w(os, r.markdown, r.significant);
    echo_parameters(w, cfg);
    const auto ref = resolve_reference(r);
    echo_reference(w, ref);
    const auto plain = run_method(method::djm, r.problem.problem, r.terms);
    const auto modified = run_method(method::mdjm, r.problem.problem, r.terms);
    const expr &sp = plain.partial_sums().back();
    const expr &sm = modified.partial_sums().back();

    w.header({"x", "t", "djm_error", "mdjm_error", "ratio"});
    std::size_t cells = 0;
    std::size_t mdjm_le = 0;
    real rmin = std::numeric_limits<real>::infinity();
    real rmax = 0;
    real log_sum = 0;
    std::size_t finite = 0;
    for (const auto &t : r.ts) {
        for (const auto &x : r.xs) {
            const real want = ref.ref(x, t);
            const real ed = abs(eval(sp, x, t) - want);
            const real em = abs(eval(sm, x, t) - want);
            const real ratio = error_ratio(ed, em);
            w.row({writer::coord(x), writer::coord(t), w.value(ed), w.value(em), w.value(ratio)});
            ++cells;
            mdjm_le += em <= ed ? 1 : 0;
            rmin = std::min(rmin, ratio);
            rmax = std::max(rmax, ratio);
            if (!isinf(ratio) && ratio > 0) {
                log_sum += log(ratio);
                ++finite;
            }
        }
    }
    w.note("cells = " + std::to_string(cells));
    w.note("mdjm_le_djm = " + std::to_string(mdjm_le));
    w.note("ratio_min = " + format_sci(rmin, 6));
    w.note("ratio_max = " + format_sci(rmax, 6));
    w.note("ratio_geomean = " + (finite ? format_sci(real(exp(log_sum / finite)), 6) : std::string("n/a")));

    const real x20(20);
    const real t05("0.5");
    const real target("1e-10");
    const auto long_plain = run_method(method::djm, r.problem.problem, max_terms(method::djm));
    const auto long_mod = run_method(method::mdjm, r.problem.problem, max_terms(method::mdjm));
    auto show = [](const series_solution<expr> &sol, std::optional<std::size_t> k) {
        return k ? std::to_string(*k) : "none<=" + std::to_string(sol.size());
    };
    w.note("terms_to_1e-10 at x=20 t=0.5: djm = " + show(long_plain, terms_to_reach(long_plain, ref.ref.evaluate, x20, t05, target)) +
           ", mdjm = " + show(long_mod, terms_to_reach(long_mod, ref.ref.evaluate, x20, t05, target)));
    return exit_ok;
}

inline int cmd_residual(const run_config &cfg, const resolved &r, std::ostream &os)
{
    writer w(os, r.markdown, r.significant);
    echo_parameters(w, cfg);
    std::vector<grid_point> pts;
    for (const auto &t : r.ts) {
        for (const auto &x : r.xs) {
            pts.push_back({x, t});
        }
    }
    auto emit = [&](const residual_report &rep) {
        w.note("tolerance = " + format_sci(residual_report::tolerance(rep.digits), 6) + ", step = " +
               format_sci(rep.h, 6) + ", below_tolerance = " +
               yes_no(rep.below(residual_report::tolerance(rep.digits))));
        w.header({"x", "t", "residual", "fd_floor", "verdict"});
        for (const auto &p : rep.points) {
            w.row({writer::coord(p.x), writer::coord(p.t), w.value(p.residual), w.value(p.floor),
                   p.below_floor ? "below-floor" : "above-floor"});
        }
    };
    if (r.target == "zero") {
        emit(pde_residual([](const real &, const real &) { return real(0); }, r.problem.pde, pts));
        return exit_ok;
    }
    if (r.target == "series") {
        const auto sol = run_method(r.meth, r.problem.problem, r.terms);
        for (std::size_t k = 1; k <= sol.size(); ++k) {
            const expr s = sol.partial_sum(k - 1);
            w.note("partial sum of " + std::to_string(k) + " term" + (k > 1 ? "s" : ""));
            emit(pde_residual([&](const real &x, const real &t) { return eval(s, x, t); }, r.problem.pde, pts));
        }
        return exit_ok;
    }
    const auto ref = resolve_reference(r);
    echo_reference(w, ref);
    try {
        emit(pde_residual(ref.ref.evaluate, r.problem.pde, pts, ref.ref.digits));
    } catch (const std::out_of_range &) {
        throw config_error("residual: stencil leaves the numeric reference window; use t >= " +
                           format_sci(8 * fd::default_step(ref.ref.digits), 3));
    }
    return exit_ok;
}

/// Runs one command. Returns an exit code; messages go to `err`.
inline int run(const run_config &cfg, std::ostream &out, std::ostream &err)
{
    try {
        const auto cmd = cfg.command();
        if (std::find(commands().begin(), commands().end(), cmd) == commands().end()) {
            throw config_error("unknown command '" + cmd + "'");
        }
        const long digits = parse_integer("digits", cfg.get("digits"));
        if (digits < static_cast<long>(minimum_digits) || digits > 10000) {
            throw config_error("'digits' must be between " + std::to_string(minimum_digits) + " and 10000");
        }
        precision_scope scope(static_cast<unsigned>(digits));
        const resolved r = resolve(cfg);

        std::ofstream file;
        if (!cfg.out.empty()) {
            file.open(cfg.out);
            if (!file) {
                err << "djm: cannot write '" << cfg.out << "'\n";
                return exit_failure;
            }
        }
        std::ostringstream buffer;
        int code = exit_ok;
        if (cmd == "series") {
            code = cmd_series(cfg, r, buffer);
        } else if (cmd == "table") {
            code = cmd_table(cfg, r, buffer);
        } else if (cmd == "compare") {
            code = cmd_compare(cfg, r, buffer);
        } else if (cmd == "residual") {
            code = cmd_residual(cfg, r, buffer);
        } else {
            code = cmd_plotdata(cfg, r, buffer);
        }
        (cfg.out.empty() ? out : static_cast<std::ostream &>(file)) << buffer.str();
        return code;
    } catch (const config_error &e) {
        err << "djm: " << e.what() << "\n";
        return exit_config;
    } catch (const calibration_error &e) {
        err << "djm: calibration failed: " << e.what() << "\n";
        return exit_calibration;
    } catch (const std::exception &e) {
        err << "djm: " << e.what() << "\n";
        return exit_failure;
    }
}

/// Full command line: `djm <command> [--key value ...] [--config file] [--out file]`.
inline int run_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"DJM/MDJM series for u_tt + p u_xx + q (u^2)_xx + r u_xxxx = 0", "djm"};
    std::string command;
    app.add_option("command", command, "series | table | compare | residual | plotdata")->required();
    std::map<std::string, std::string> flags;
    const std::map<std::string, std::string> help{
        {"problem", "example1 | general"},
        {"c", "Example-1 parameter c > 0"},
        {"ut", "Example-1 initial velocity: consistent (c^(5/2)/4) | printed (c^(5/2)/2)"},
        {"p", "coefficient of u_xx"},
        {"q", "coefficient of (u^2)_xx"},
        {"r", "coefficient of u_xxxx"},
        {"alpha", "wave speed"},
        {"beta", "phase offset"},
        {"sign", "+1: x + alpha t, -1: x - alpha t"},
        {"amplitude-sign", "sign of the printed amplitude"},
        {"amplitude", "printed | solitary"},
        {"method", "djm | mdjm"},
        {"terms", "number of series terms (djm <= 7, mdjm <= 8; compare <= 7)"},
        {"digits", "working precision in decimal digits (default: DJM_DIGITS or 100)"},
        {"x", "x grid: comma list or start:stop:step"},
        {"t", "t grid: comma list or start:stop:step"},
        {"reference", "calibrated | numeric | a closed-form reading name"},
        {"target", "residual of: reference | series | zero"},
        {"basis", "reduced | product_rule"},
        {"format", "csv | markdown"},
        {"significant", "significant digits in values (0: shortest round trip)"}};
    for (const auto &key : known_keys()) {
        if (key != "command") {
            app.add_option("--" + key, flags[key], help.at(key));
        }
    }
    std::string config_path;
    std::string out_path;
    app.add_option("--config", config_path, "flat key = value file; flags override it");
    app.add_option("--out", out_path, "output file (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        err << "djm: " << e.what() << "\n";
        return exit_config;
    }

    run_config cfg;
    try {
        if (!config_path.empty()) {
            load_config_file(config_path, cfg);
        }
        cfg.set("command", command);
        for (const auto &[key, value] : flags) {
            if (app.get_option("--" + key)->count() > 0) {
                cfg.set(key, value);
            }
        }
    } catch (const config_error &e) {
        err << "djm: " << e.what() << "\n";
        return exit_config;
    }
    cfg.out = out_path;
    return run(cfg, out, err);
}

} // namespace djm::cli

#endif
