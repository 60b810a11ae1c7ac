#ifndef DJM_BOUSSINESQ_HPP
#define DJM_BOUSSINESQ_HPP

// Integral-equation forms of u_tt + p u_xx + q (u^2)_xx + r u_xxxx = 0:
//
//   u = u(x,0) + t u_t(x,0) + L(u) + N(u),
//   L(u) = -II[p u_xx + r u_xxxx],   N(u) = -q II[(u^2)_xx],
//
// where II is the double time integral from 0. Also the reference solutions
// the series is measured against, and error tables / curve samples.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "djm/algebra.hpp"
#include "djm/iterate.hpp"
#include "djm/oracle.hpp"
#include "djm/precision.hpp"

namespace djm
{

/// Which u_t(x,0) coefficient Example 1 uses. `consistent` is c^(5/2)/4: the
/// time derivative of the closed form at t = 0, the coefficient carried by
/// the published first iterate, and the one that regenerates the published
/// error tables. `printed` is the c^(5/2)/2 written in the initial condition.
enum class initial_velocity { consistent, printed };

struct example1_params {
    real c;
    initial_velocity velocity = initial_velocity::consistent;
};

struct boussinesq_params {
    real p;
    real q;
    real r;
};

/// `printed`: amplitude sign * 3 (alpha^2 + p)^(1/2) / (2q) with the published
/// u_t(x,0). `solitary`: amplitude -3 (alpha^2 + p) / (2q) and the matching
/// u_t(x,0), which makes the data an exact travelling wave.
enum class amplitude_form { printed, solitary };

struct solitary_wave_params {
    real alpha;
    real beta;
    int direction = 1;      ///< +1 for x + alpha t, -1 for x - alpha t
    int amplitude_sign = 1; ///< sign of the printed amplitude
    amplitude_form form = amplitude_form::printed;
};

struct boussinesq_problem {
    iteration_problem<expr> problem;
    pde_coefficients pde;
    std::string label;
    /// Travelling-wave data: u = amplitude * sech^2(k (x + speed t) + offset).
    real amplitude;
    real speed;
};

/// L and N for given PDE coefficients, acting on any expression over `ph`.
inline std::pair<operator_spec<expr>, operator_spec<expr>> boussinesq_operators(const pde_coefficients &pde)
{
    const real p = pde.p;
    const real q = pde.q;
    const real r = pde.r;
    auto L = linear_operator<expr>("L", [p, r](const expr &u) {
        const expr uxx = diff_x(u, 2);
        const expr uxxxx = diff_x(uxx, 2);
        return double_integral_t(scale(uxx, -p) + scale(uxxxx, -r));
    });
    auto N = nonlinear_operator<expr>("N", [q](const expr &u) {
        return double_integral_t(scale(diff_x(mul(u, u), 2), -q));
    });
    return {std::move(L), std::move(N)};
}

inline boussinesq_problem build_example1(const example1_params &params, tanh_basis basis = tanh_basis::reduced)
{
    if (!(params.c > 0)) {
        throw std::domain_error("example1: c must be positive");
    }
    const real &c = params.c;
    const real rc = sqrt(c);
    const phase ph{rc / 2, rc / 2};
    const real velocity_scale = params.velocity == initial_velocity::consistent ? real(4) : real(2);
    const real ut_coef = -(c * c * rc) / velocity_scale;

    expr f1 = expr::term(ph, c / 2, 0, 2, 0, basis);
    expr f2 = expr::term(ph, ut_coef, 1, 2, 1, basis);
    const pde_coefficients pde{real(-1), real(3), real(1)};
    auto [L, N] = boussinesq_operators(pde);
    boussinesq_problem out{iteration_problem<expr>::make(std::move(f1), std::move(f2), std::move(L), std::move(N)),
                           pde, "example1 c=" + format_sci(c, 20), c / 2, real(0)};
    return out;
}

inline boussinesq_problem build_general(const boussinesq_params &params, const solitary_wave_params &wave,
                                        tanh_basis basis = tanh_basis::reduced)
{
    if (params.q == 0) {
        throw std::domain_error("general: q must be nonzero");
    }
    if (params.r == 0) {
        throw std::domain_error("general: r must be nonzero");
    }
    if (wave.direction != 1 && wave.direction != -1) {
        throw std::invalid_argument("general: direction must be +1 or -1");
    }
    if (wave.amplitude_sign != 1 && wave.amplitude_sign != -1) {
        throw std::invalid_argument("general: amplitude sign must be +1 or -1");
    }
    const real &alpha = wave.alpha;
    const real s = alpha * alpha + params.p;
    const real ratio = s / (-params.r);
    if (!(ratio > 0)) {
        throw std::domain_error("general: (alpha^2 + p) / (-r) must be positive for a real phase scale");
    }
    const real k = sqrt(ratio) / 2;
    const phase ph{k, wave.beta};

    real amplitude;
    real ut_coef;
    if (wave.form == amplitude_form::printed) {
        if (!(s > 0)) {
            throw std::domain_error("general: printed amplitude needs alpha^2 + p > 0");
        }
        amplitude = wave.amplitude_sign * 3 * sqrt(s) / (2 * params.q);
        ut_coef = -wave.direction * 3 * alpha * s * sqrt(s) / (2 * params.q * sqrt(-params.r));
    } else {
        amplitude = -3 * s / (2 * params.q);
        // d/dt A sech^2(k (x + d alpha t) + beta) at t = 0
        ut_coef = -2 * amplitude * k * wave.direction * alpha;
    }
    expr f1 = expr::term(ph, amplitude, 0, 2, 0, basis);
    expr f2 = expr::term(ph, ut_coef, 1, 2, 1, basis);
    const pde_coefficients pde{params.p, params.q, params.r};
    auto [L, N] = boussinesq_operators(pde);
    boussinesq_problem out{iteration_problem<expr>::make(std::move(f1), std::move(f2), std::move(L), std::move(N)),
                           pde, "general", amplitude, wave.direction * alpha};
    return out;
}

// ---------------------------------------------------------------------------
// Reference solutions

struct reference_solution {
    evaluator evaluate;
    /// Candidate name, or "numeric" for the spectral fallback.
    std::string reading;
    /// "closed-form:<reading>" or "numeric-fallback:<settings>".
    std::string provenance;
    /// Decimal digits the values can be trusted to.
    unsigned digits = 0;

    real operator()(const real &x, const real &t) const
    {
        return evaluate(x, t);
    }
};

struct candidate_report {
    std::string reading;
    real ic_value_error;
    real ic_velocity_error;
    real max_residual;
    real tolerance;
    bool ic_ok = false;
    bool residual_ok = false;

    bool passes() const
    {
        return ic_ok && residual_ok;
    }
};

struct calibration_result {
    reference_solution reference;
    std::vector<candidate_report> candidates;
    std::size_t passing_closed_forms = 0;
    bool used_fallback = false;
    /// Convenience for the exact-solution check: the single passing entry.
    std::string chosen;
};

class calibration_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct calibration_settings {
    std::vector<real> ic_points{real(-4), real(-2), real(-1), real(0), real(1), real(3)};
    std::vector<grid_point> residual_points;
    double t_end = 1.0;
    spectral_settings spectral{};
    bool allow_fallback = true;

    static calibration_settings defaults()
    {
        calibration_settings s;
        for (const char *x : {"-3", "-1", "0.5", "2"}) {
            for (const char *t : {"0.3", "0.6"}) {
                s.residual_points.push_back({real(x), real(t)});
            }
        }
        return s;
    }
};

namespace detail
{

// (c/2) sech^2((sqrt c / 2) x + phi(t))
inline evaluator example1_closed_form(const real &c, std::function<real(const real &)> phi)
{
    const real amp = c / 2;
    const real k = sqrt(c) / 2;
    return [amp, k, phi = std::move(phi)](const real &x, const real &t) {
        const auto st = sech_tanh(k * x + phi(t));
        return amp * st.first * st.first;
    };
}

} // namespace detail

inline const std::vector<std::string> &example1_reading_names()
{
    static const std::vector<std::string> names{"sqrt(1+c)*t", "sqrt(1+c*t)", "linear-fit"};
    return names;
}

/// One of the closed-form readings of the published exact solution
///   (c/2) sech^2[(sqrt c/2) x + phi(t)]:
///   "sqrt(1+c)*t":  phi = (sqrt c/2) sqrt(1+c) t + sqrt c/2
///   "sqrt(1+c*t)":  phi = (sqrt c/2) sqrt(1 + c t)
///   "linear":       phi = (sqrt c/2)(1 + v t)  (v supplied)
inline reference_solution example1_reading(const real &c, const std::string &name, const real &v = real(0))
{
    if (!(c > 0)) {
        throw std::domain_error("example1: c must be positive");
    }
    const real k = sqrt(c) / 2;
    std::function<real(const real &)> phi;
    if (name == "sqrt(1+c)*t") {
        const real speed = k * sqrt(1 + c);
        phi = [k, speed](const real &t) { return speed * t + k; };
    } else if (name == "sqrt(1+c*t)") {
        phi = [k, c](const real &t) { return k * sqrt(1 + c * t); };
    } else if (name == "linear" || name == "linear-fit") {
        phi = [k, v](const real &t) { return k * (1 + v * t); };
    } else {
        throw std::invalid_argument("unknown example1 reading '" + name + "'");
    }
    reference_solution ref;
    ref.evaluate = detail::example1_closed_form(c, std::move(phi));
    ref.reading = name;
    ref.provenance = "closed-form:" + name;
    ref.digits = current_precision().digits;
    return ref;
}

/// Fits v in phi = (sqrt c/2)(1 + v t). The residual is affine in w = v^2, so
/// two oracle residual evaluations (w = 0, 1) give the least-squares w; a
/// negative w has no real speed and is clamped to 0. The sign of v is chosen
/// to match the problem's u_t(x,0).
inline real fit_linear_speed(const real &c, const pde_coefficients &pde, std::span<const grid_point> points,
                             const expr &velocity_at_zero)
{
    const auto r0 = pde_residual(example1_reading(c, "linear", real(0)).evaluate, pde, points);
    const auto r1 = pde_residual(example1_reading(c, "linear", real(1)).evaluate, pde, points);
    real num = 0;
    real den = 0;
    for (std::size_t i = 0; i < r0.points.size(); ++i) {
        const real d = r1.points[i].residual - r0.points[i].residual;
        num += r0.points[i].residual * d;
        den += d * d;
    }
    real w = den == 0 ? real(0) : real(-num / den);
    if (w < 0) {
        w = 0;
    }
    real v = sqrt(w);
    if (v != 0) {
        // u_t(x,0) of the candidate is -c k v sech^2 tanh; compare signs at x = 0
        // against the problem's velocity profile just right of the crest.
        const real probe = eval(velocity_at_zero, real(1), real(0));
        const real k = sqrt(c) / 2;
        const auto st = sech_tanh(k * 1 + k);
        const real cand = -c * k * v * st.first * st.first * st.second;
        if ((probe < 0) != (cand < 0)) {
            v = -v;
        }
    }
    return v;
}

namespace detail
{

inline candidate_report assess(const std::string &name, const evaluator &u, const expr &source,
                               const expr &velocity, const pde_coefficients &pde, const calibration_settings &settings,
                               unsigned digits, const std::function<real(const real &)> *exact_velocity = nullptr)
{
    candidate_report rep;
    rep.reading = name;
    rep.tolerance = residual_report::tolerance(digits);
    const real h = fd::default_step(digits);
    rep.ic_value_error = 0;
    rep.ic_velocity_error = 0;
    for (const auto &x : settings.ic_points) {
        const real want_u = eval(source, x, real(0));
        const real want_v = eval(velocity, x, real(0));
        const real got_u = u(x, real(0));
        const real got_v = exact_velocity != nullptr ? (*exact_velocity)(x)
                                                     : fd::d1([&](const real &tt) { return u(x, tt); }, real(0), h);
        rep.ic_value_error = std::max(rep.ic_value_error, real(abs(got_u - want_u)));
        rep.ic_velocity_error = std::max(rep.ic_velocity_error, real(abs(got_v - want_v)));
    }
    rep.ic_ok = rep.ic_value_error < rep.tolerance && rep.ic_velocity_error < rep.tolerance;
    const auto res = pde_residual(u, pde, settings.residual_points, digits);
    rep.max_residual = res.max_abs_residual();
    rep.residual_ok = rep.max_residual < rep.tolerance;
    return rep;
}

} // namespace detail

/// Calibration protocol: every closed-form candidate must reproduce both
/// initial conditions and have a PDE residual below 10^(-digits/3) at the
/// residual points. Exactly one passing candidate is used; several passing
/// candidates are resolved by smallest residual; none falls back to the
/// spectral reference, which is checked the same way at its own accuracy.
inline calibration_result calibrate_reference(const boussinesq_problem &bp,
                                              const std::vector<reference_solution> &candidates,
                                              const calibration_settings &settings)
{
    const expr source = bp.problem.source();
    const expr velocity = diff_t(source);
    const unsigned digits = current_precision().digits;

    calibration_result out;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto rep = detail::assess(candidates[i].reading, candidates[i].evaluate, source, velocity, bp.pde, settings,
                                  digits);
        if (rep.passes()) {
            ++out.passing_closed_forms;
            if (!best || rep.max_residual < out.candidates[*best].max_residual) {
                best = i;
            }
        }
        out.candidates.push_back(std::move(rep));
    }
    if (best) {
        out.reference = candidates[*best];
        out.chosen = candidates[*best].reading;
        return out;
    }
    if (!settings.allow_fallback) {
        throw calibration_error("no closed-form reading passes the initial-condition and residual checks");
    }

    std::shared_ptr<const spectral_solution> handle;
    auto u0 = [source](const real &x) { return eval(source, x, real(0)); };
    auto ut0 = [velocity](const real &x) { return eval(velocity, x, real(0)); };
    evaluator numeric;
    try {
        numeric = numeric_reference(u0, ut0, bp.pde, settings.t_end, settings.spectral, &handle);
    } catch (const instability_error &e) {
        throw calibration_error(std::string("numeric fallback failed: ") + e.what());
    }
    std::function<real(const real &)> exact_velocity = [handle](const real &x) {
        return real(handle->velocity(x.convert_to<double>(), 0.0));
    };
    auto rep = detail::assess("numeric", numeric, source, velocity, bp.pde, settings, spectral_digits, &exact_velocity);
    if (!rep.passes()) {
        out.candidates.push_back(std::move(rep));
        throw calibration_error("numeric fallback fails its own residual/IC check (max residual " +
                                format_sci(out.candidates.back().max_residual, 6) + ")");
    }
    out.candidates.push_back(std::move(rep));
    out.used_fallback = true;
    out.chosen = "numeric";
    const auto &ss = settings.spectral;
    out.reference.evaluate = std::move(numeric);
    out.reference.reading = "numeric";
    out.reference.provenance = "numeric-fallback:spectral(N=" + std::to_string(ss.points) +
                               ",L=" + std::to_string(ss.half_width) + ",dt=" + std::to_string(ss.dt) + ")";
    out.reference.digits = spectral_digits;
    return out;
}

/// Candidate readings of the published Example-1 exact solution, including
/// the residual-fitted linear phase.
inline std::vector<reference_solution> example1_candidates(const boussinesq_problem &bp, const real &c,
                                                           const calibration_settings &settings)
{
    std::vector<reference_solution> out;
    out.push_back(example1_reading(c, "sqrt(1+c)*t"));
    out.push_back(example1_reading(c, "sqrt(1+c*t)"));
    const real v = fit_linear_speed(c, bp.pde, settings.residual_points, diff_t(bp.problem.source()));
    auto fitted = example1_reading(c, "linear-fit", v);
    fitted.provenance = "closed-form:linear-fit(v=" + format_sci(v, 20) + ")";
    out.push_back(std::move(fitted));
    return out;
}

inline calibration_result reference_example1(const example1_params &params,
                                             const calibration_settings &settings = calibration_settings::defaults())
{
    const auto bp = build_example1(params);
    return calibrate_reference(bp, example1_candidates(bp, params.c, settings), settings);
}

/// The problem's own travelling-wave data A sech^2(k (x + speed t) + beta) as a candidate.
inline reference_solution travelling_wave_reading(const boussinesq_problem &bp)
{
    const phase ph = bp.problem.f1.get_phase();
    const real amp = bp.amplitude;
    const real ks = ph.a * bp.speed;
    reference_solution ref;
    ref.evaluate = [ph, amp, ks](const real &x, const real &t) {
        const auto st = sech_tanh(ph.a * x + ks * t + ph.b);
        return amp * st.first * st.first;
    };
    ref.reading = "travelling-wave";
    ref.provenance = "closed-form:travelling-wave";
    ref.digits = current_precision().digits;
    return ref;
}

inline calibration_result reference_general(const boussinesq_problem &bp,
                                            const calibration_settings &settings = calibration_settings::defaults())
{
    return calibrate_reference(bp, {travelling_wave_reading(bp)}, settings);
}

// ---------------------------------------------------------------------------
// Tables and curves

struct error_row {
    real x;
    real t;
    real approx;
    real reference;
    real abs_error;
};

/// Rows ordered t-major (one table row per t), x within.
inline std::vector<error_row> error_table(const expr &approx, const evaluator &reference, std::span<const real> xs,
                                          std::span<const real> ts)
{
    std::vector<error_row> rows;
    rows.reserve(xs.size() * ts.size());
    for (const auto &t : ts) {
        for (const auto &x : xs) {
            error_row row{x, t, eval(approx, x, t), reference(x, t), real(0)};
            row.abs_error = abs(row.approx - row.reference);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

struct curve_sample {
    real x;
    real approx;
    real reference;
};

inline std::vector<curve_sample> figure_data(const expr &approx, const evaluator &reference, std::span<const real> xs,
                                             const real &t)
{
    std::vector<curve_sample> out;
    out.reserve(xs.size());
    for (const auto &x : xs) {
        out.push_back({x, eval(approx, x, t), reference(x, t)});
    }
    return out;
}

/// k-term modified series for Example 1 (S_{k-1}).
inline expr example1_partial_sum(const example1_params &params, std::size_t k, method m = method::mdjm)
{
    const auto bp = build_example1(params);
    const auto sol = run_method(m, bp.problem, k);
    return sol.partial_sum(sol.size() - 1);
}

} // namespace djm

#endif
