#ifndef DJM_ITERATE_HPP
#define DJM_ITERATE_HPP

// Iteration engines for u = f + L(u) + N(u):
//
//   plain:     u_0 = f,    u_{m+1} = L(u_m) + G_m
//   modified:  u_0 = f1,   u_1 = f2 + L(u_0) + G_0,   u_{m+1} = L(u_m) + G_m (m >= 1)
//
// with the telescoping pieces G_0 = N(S_0), G_i = N(S_i) - N(S_{i-1}) built
// from partial sums S_i = u_0 + ... + u_i.
//
// The engine is generic over the element type E. E needs +, -, scalar
// multiplication by djm::real, and the ADL customization points
//   random_element(const E& like, std::mt19937_64&)
//   approx_equal_elements(const E&, const E&)
//   is_zero_element(const E&)
//   element_norm(const E&)          (only for the early-stop option)

#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "djm/algebra.hpp"
#include "djm/precision.hpp"

namespace djm
{

inline bool is_zero_element(const expr &e)
{
    return e.is_zero();
}

template <class E>
struct operator_spec {
    std::string name;
    std::function<E(const E &)> apply;
    bool declared_linear = false;

    E operator()(const E &u) const
    {
        return apply(u);
    }
};

template <class E, class F>
operator_spec<E> linear_operator(std::string name, F &&fn)
{
    return {std::move(name), std::function<E(const E &)>(std::forward<F>(fn)), true};
}

template <class E, class F>
operator_spec<E> nonlinear_operator(std::string name, F &&fn)
{
    return {std::move(name), std::function<E(const E &)>(std::forward<F>(fn)), false};
}

class linearity_error : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

/// Checks op(2u + 3v) == 2 op(u) + 3 op(v) on `pairs` random pairs drawn like `like`.
template <class E>
bool audit_linearity(const operator_spec<E> &op, const E &like, unsigned pairs = 20,
                     std::uint64_t seed = 0x5eed'd1e5ULL)
{
    std::mt19937_64 rng(seed);
    const real two(2);
    const real three(3);
    for (unsigned i = 0; i < pairs; ++i) {
        const E u = random_element(like, rng);
        const E v = random_element(like, rng);
        const E lhs = op(two * u + three * v);
        const E rhs = two * op(u) + three * op(v);
        if (!approx_equal_elements(lhs, rhs)) {
            return false;
        }
    }
    return true;
}

/// u = f1 + f2 + L(u) + N(u). Use make() so that L is audited.
template <class E>
struct iteration_problem {
    E f1;
    E f2;
    operator_spec<E> L;
    operator_spec<E> N;

    static iteration_problem make(E f1, E f2, operator_spec<E> L, operator_spec<E> N)
    {
        if (!L.declared_linear) {
            throw linearity_error("operator '" + L.name + "' must be declared linear");
        }
        if (!audit_linearity(L, f1)) {
            throw linearity_error("operator '" + L.name + "' is declared linear but fails the linearity audit");
        }
        if (N.declared_linear && !audit_linearity(N, f1)) {
            throw linearity_error("operator '" + N.name + "' is declared linear but fails the linearity audit");
        }
        return iteration_problem{std::move(f1), std::move(f2), std::move(L), std::move(N)};
    }

    E source() const
    {
        return f1 + f2;
    }

    /// The degenerate split f1 = f, f2 = 0 used by the plain method.
    iteration_problem unsplit() const
    {
        E f = source();
        E zero = f2 - f2;
        return iteration_problem{std::move(f), std::move(zero), L, N};
    }
};

enum class method { djm, mdjm };

inline const char *method_name(method m)
{
    return m == method::djm ? "djm" : "mdjm";
}

template <class E>
class series_solution
{
public:
    explicit series_solution(method tag) : tag_(tag) {}

    method tag() const
    {
        return tag_;
    }
    std::size_t size() const
    {
        return terms_.size();
    }
    const E &term(std::size_t i) const
    {
        return terms_.at(i);
    }
    const std::vector<E> &terms() const
    {
        return terms_;
    }
    const std::vector<E> &partial_sums() const
    {
        return partial_;
    }

    /// S_i = u_0 + ... + u_i.
    const E &partial_sum(std::size_t i) const
    {
        if (i >= partial_.size()) {
            throw std::out_of_range("partial_sum: index " + std::to_string(i) + " but only " +
                                    std::to_string(partial_.size()) + " terms");
        }
        return partial_[i];
    }

    void push(E term)
    {
        if (partial_.empty()) {
            partial_.push_back(term);
        } else {
            partial_.push_back(partial_.back() + term);
        }
        terms_.push_back(std::move(term));
    }

private:
    method tag_;
    std::vector<E> terms_;
    std::vector<E> partial_;
};

template <class E>
const E &partial_sum(const series_solution<E> &sol, std::size_t i)
{
    return sol.partial_sum(i);
}

/// G_0 = N(S_0), G_i = N(S_i) - N(S_{i-1}).
template <class E>
E g_term(const operator_spec<E> &N, std::span<const E> partial_sums, std::size_t i)
{
    if (i >= partial_sums.size()) {
        throw std::out_of_range("g_term: index " + std::to_string(i) + " but only " +
                                std::to_string(partial_sums.size()) + " partial sums");
    }
    if (i == 0) {
        return N(partial_sums[0]);
    }
    return N(partial_sums[i]) - N(partial_sums[i - 1]);
}

struct iteration_options {
    /// Stop once the newest term's norm drops below `tolerance`. Off by default;
    /// when it triggers the solution holds fewer than k terms.
    bool stop_when_small = false;
    real tolerance = 0;
};

namespace detail
{

// Shared driver: u_0 given, then u_{m+1} = extra_m + L(u_m) + G_m where
// extra_0 = f2 (modified method) and zero otherwise. N(S_m) is cached so each
// step applies N once.
template <class E>
series_solution<E> run_series(method tag, const iteration_problem<E> &problem, std::size_t k,
                              const iteration_options &options, bool inject_f2)
{
    if (k == 0) {
        throw std::invalid_argument("series: term count must be >= 1");
    }
    series_solution<E> sol(tag);
    sol.push(problem.f1);
    std::optional<E> n_prev;
    for (std::size_t m = 0; m + 1 < k; ++m) {
        const E &s_m = sol.partial_sum(m);
        E n_cur = problem.N(s_m);
        E g = n_prev ? E(n_cur - *n_prev) : n_cur;
        E next = problem.L(sol.term(m)) + g;
        if (m == 0 && inject_f2) {
            next = problem.f2 + next;
        }
        n_prev = std::move(n_cur);
        const bool small = options.stop_when_small && element_norm(next) < options.tolerance;
        sol.push(std::move(next));
        if (small) {
            break;
        }
    }
    return sol;
}

} // namespace detail

/// Plain iteration; requires f2 = 0 (use problem.unsplit() otherwise).
template <class E>
series_solution<E> djm_series(const iteration_problem<E> &problem, std::size_t k,
                              const iteration_options &options = {})
{
    if (!is_zero_element(problem.f2)) {
        throw std::invalid_argument("djm_series: f2 must be zero; call unsplit() for the plain method");
    }
    return detail::run_series(method::djm, problem, k, options, false);
}

/// Modified iteration: seed with f1, inject f2 into the first iterate.
template <class E>
series_solution<E> mdjm_series(const iteration_problem<E> &problem, std::size_t k,
                               const iteration_options &options = {})
{
    return detail::run_series(method::mdjm, problem, k, options, true);
}

template <class E>
series_solution<E> run_method(method m, const iteration_problem<E> &problem, std::size_t k,
                              const iteration_options &options = {})
{
    return m == method::djm ? djm_series(problem.unsplit(), k, options) : mdjm_series(problem, k, options);
}

struct grid_point {
    real x;
    real t;
};

struct convergence_report {
    /// sup over the grid of |u_i|.
    std::vector<real> sup_norms;
    /// sup_norms[i+1] / sup_norms[i]; 0 when the numerator is 0.
    std::vector<real> ratios;
    /// errors[p][i] = |S_i - reference| at grid point p (empty without a reference).
    std::vector<std::vector<real>> errors;
};

template <class E, class Eval>
    requires std::invocable<Eval &, const E &, const real &, const real &>
convergence_report convergence_diagnostics(const series_solution<E> &sol, std::span<const grid_point> grid,
                                           Eval &&evaluate,
                                           const std::function<real(const real &, const real &)> &reference = {})
{
    if (grid.empty()) {
        throw std::invalid_argument("convergence_diagnostics: empty grid");
    }
    convergence_report rep;
    for (const auto &u : sol.terms()) {
        real sup = 0;
        for (const auto &p : grid) {
            sup = std::max(sup, real(abs(evaluate(u, p.x, p.t))));
        }
        rep.sup_norms.push_back(std::move(sup));
    }
    for (std::size_t i = 0; i + 1 < rep.sup_norms.size(); ++i) {
        const real &num = rep.sup_norms[i + 1];
        const real &den = rep.sup_norms[i];
        if (num == 0) {
            rep.ratios.emplace_back(0);
        } else if (den == 0) {
            rep.ratios.push_back(std::numeric_limits<real>::infinity());
        } else {
            rep.ratios.push_back(num / den);
        }
    }
    if (reference) {
        for (const auto &p : grid) {
            const real ref = reference(p.x, p.t);
            std::vector<real> row;
            for (std::size_t i = 0; i < sol.size(); ++i) {
                row.push_back(abs(evaluate(sol.partial_sum(i), p.x, p.t) - ref));
            }
            rep.errors.push_back(std::move(row));
        }
    }
    return rep;
}

/// Overload for the sech/tanh algebra.
template <class E>
convergence_report convergence_diagnostics(const series_solution<E> &sol, std::span<const grid_point> grid,
                                           const std::function<real(const real &, const real &)> &reference = {})
{
    return convergence_diagnostics(
        sol, grid, [](const E &e, const real &x, const real &t) { return eval(e, x, t); }, reference);
}

} // namespace djm

#endif
