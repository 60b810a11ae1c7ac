#ifndef DJM_ALGEBRA_HPP
#define DJM_ALGEBRA_HPP

// Closed algebra of finite sums  coef * t^k * sech^m(theta) * tanh^n(theta)
// over a single affine phase theta = a*x + b.
//
// Derivatives in x stay inside the algebra because
//   d/dx sech = -a sech tanh,   d/dx tanh = a sech^2,
// and tanh^2 = 1 - sech^2 lets every term be written with n in {0, 1}.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "djm/precision.hpp"

namespace djm
{

struct phase {
    real a;
    real b;

    friend bool operator==(const phase &l, const phase &r)
    {
        return l.a == r.a && l.b == r.b;
    }
};

class phase_mismatch : public std::logic_error
{
public:
    phase_mismatch() : std::logic_error("expressions over different phases cannot be combined") {}
};

/// How tanh powers are stored. `reduced` is the canonical form (tanh^n with
/// n in {0,1}); `product_rule` keeps every tanh power produced by the
/// derivative rules, which is the layout of hand/CAS expansions that do not
/// apply tanh^2 = 1 - sech^2.
enum class tanh_basis { reduced, product_rule };

struct monomial_key {
    unsigned k = 0; ///< power of t
    unsigned m = 0; ///< power of sech
    unsigned n = 0; ///< power of tanh

    friend auto operator<=>(const monomial_key &, const monomial_key &) = default;
};

struct monomial {
    real coef;
    unsigned k = 0;
    unsigned m = 0;
    unsigned n = 0;

    monomial_key key() const
    {
        return {k, m, n};
    }
};

namespace detail
{

inline real binomial(unsigned n, unsigned j)
{
    real r = 1;
    for (unsigned i = 1; i <= j; ++i) {
        r *= n - j + i;
        r /= i;
    }
    return r;
}

// Sorts by key, merges duplicates, drops zero and sub-threshold coefficients.
inline std::vector<monomial> merge_sorted(std::vector<monomial> raw, const real &prune)
{
    std::sort(raw.begin(), raw.end(),
              [](const monomial &l, const monomial &r) { return l.key() < r.key(); });
    std::vector<monomial> out;
    out.reserve(raw.size());
    for (auto &mo : raw) {
        if (!out.empty() && out.back().key() == mo.key()) {
            out.back().coef += mo.coef;
        } else {
            out.push_back(std::move(mo));
        }
    }
    std::erase_if(out, [&](const monomial &mo) { return mo.coef == 0 || abs(mo.coef) < prune; });
    return out;
}

// tanh^n -> tanh^(n mod 2) * (1 - sech^2)^(n / 2)
inline void push_reduced(std::vector<monomial> &out, monomial mo)
{
    if (mo.n < 2) {
        out.push_back(std::move(mo));
        return;
    }
    const unsigned q = mo.n / 2;
    const unsigned rem = mo.n % 2;
    for (unsigned j = 0; j <= q; ++j) {
        real c = mo.coef * binomial(q, j);
        if (j % 2 == 1) {
            c = -c;
        }
        out.push_back({std::move(c), mo.k, mo.m + 2 * j, rem});
    }
}

} // namespace detail

/// Canonical finite sum of monomials over one phase. Immutable once built.
class expr
{
public:
    explicit expr(phase ph, tanh_basis basis = tanh_basis::reduced)
        : phase_(std::move(ph)), basis_(basis)
    {
    }

    /// Builds from arbitrary (possibly unreduced, unsorted) monomials.
    static expr from_terms(phase ph, std::vector<monomial> raw,
                           tanh_basis basis = tanh_basis::reduced)
    {
        expr e(std::move(ph), basis);
        e.terms_ = canonical_terms(std::move(raw), basis);
        return e;
    }

    static expr term(const phase &ph, real coef, unsigned k, unsigned m, unsigned n,
                     tanh_basis basis = tanh_basis::reduced)
    {
        std::vector<monomial> raw;
        raw.push_back({std::move(coef), k, m, n});
        return from_terms(ph, std::move(raw), basis);
    }

    static expr constant(const phase &ph, real value, tanh_basis basis = tanh_basis::reduced)
    {
        return term(ph, std::move(value), 0, 0, 0, basis);
    }

    const phase &get_phase() const
    {
        return phase_;
    }
    tanh_basis basis() const
    {
        return basis_;
    }
    const std::vector<monomial> &terms() const
    {
        return terms_;
    }
    std::size_t size() const
    {
        return terms_.size();
    }
    bool is_zero() const
    {
        return terms_.empty();
    }

    /// Coefficient of t^k sech^m tanh^n, if present.
    std::optional<real> coefficient(unsigned k, unsigned m, unsigned n) const
    {
        const monomial_key key{k, m, n};
        auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                                   [](const monomial &mo, const monomial_key &kk) { return mo.key() < kk; });
        if (it != terms_.end() && it->key() == key) {
            return it->coef;
        }
        return std::nullopt;
    }

    /// Same phase and basis, zero terms.
    expr zero_like() const
    {
        return expr(phase_, basis_);
    }

    /// Re-expresses in the other tanh basis (product_rule -> reduced is exact;
    /// reduced -> product_rule is the identity on terms).
    expr in_basis(tanh_basis target) const
    {
        return from_terms(phase_, terms_, target);
    }

    static std::vector<monomial> canonical_terms(std::vector<monomial> raw, tanh_basis basis)
    {
        if (basis == tanh_basis::reduced) {
            std::vector<monomial> reduced;
            reduced.reserve(raw.size());
            for (auto &mo : raw) {
                detail::push_reduced(reduced, std::move(mo));
            }
            raw = std::move(reduced);
        }
        return detail::merge_sorted(std::move(raw), current_precision().prune_threshold);
    }

    friend bool operator==(const expr &l, const expr &r)
    {
        if (!(l.phase_ == r.phase_) || l.basis_ != r.basis_ || l.terms_.size() != r.terms_.size()) {
            return false;
        }
        for (std::size_t i = 0; i < l.terms_.size(); ++i) {
            if (l.terms_[i].key() != r.terms_[i].key() || l.terms_[i].coef != r.terms_[i].coef) {
                return false;
            }
        }
        return true;
    }

private:
    phase phase_;
    tanh_basis basis_;
    std::vector<monomial> terms_;
};

namespace detail
{
inline void require_compatible(const expr &l, const expr &r)
{
    if (!(l.get_phase() == r.get_phase())) {
        throw phase_mismatch();
    }
    if (l.basis() != r.basis()) {
        throw std::logic_error("expressions in different tanh bases cannot be combined");
    }
}
} // namespace detail

inline expr canonicalize(const expr &e)
{
    return expr::from_terms(e.get_phase(), e.terms(), e.basis());
}

inline expr add(const expr &l, const expr &r)
{
    detail::require_compatible(l, r);
    std::vector<monomial> raw(l.terms());
    raw.insert(raw.end(), r.terms().begin(), r.terms().end());
    return expr::from_terms(l.get_phase(), std::move(raw), l.basis());
}

inline expr scale(const expr &e, const real &lambda)
{
    std::vector<monomial> raw(e.terms());
    for (auto &mo : raw) {
        mo.coef *= lambda;
    }
    return expr::from_terms(e.get_phase(), std::move(raw), e.basis());
}

inline expr mul(const expr &l, const expr &r)
{
    detail::require_compatible(l, r);
    std::vector<monomial> raw;
    raw.reserve(l.size() * r.size());
    for (const auto &a : l.terms()) {
        for (const auto &b : r.terms()) {
            raw.push_back({a.coef * b.coef, a.k + b.k, a.m + b.m, a.n + b.n});
        }
    }
    return expr::from_terms(l.get_phase(), std::move(raw), l.basis());
}

inline expr operator+(const expr &l, const expr &r)
{
    return add(l, r);
}
inline expr operator-(const expr &e)
{
    return scale(e, real(-1));
}
inline expr operator-(const expr &l, const expr &r)
{
    return add(l, -r);
}
inline expr operator*(const expr &l, const expr &r)
{
    return mul(l, r);
}
inline expr operator*(const real &lambda, const expr &e)
{
    return scale(e, lambda);
}
inline expr operator*(const expr &e, const real &lambda)
{
    return scale(e, lambda);
}

/// d/dx with t^k s^m tau^n -> a t^k (-m s^m tau^(n+1) + n s^(m+2) tau^(n-1)).
inline expr diff_x(const expr &e)
{
    const real &a = e.get_phase().a;
    std::vector<monomial> raw;
    raw.reserve(2 * e.size());
    for (const auto &mo : e.terms()) {
        if (mo.m > 0) {
            raw.push_back({-a * mo.coef * mo.m, mo.k, mo.m, mo.n + 1});
        }
        if (mo.n > 0) {
            raw.push_back({a * mo.coef * mo.n, mo.k, mo.m + 2, mo.n - 1});
        }
    }
    return expr::from_terms(e.get_phase(), std::move(raw), e.basis());
}

inline expr diff_x(const expr &e, unsigned order)
{
    expr r = e;
    for (unsigned i = 0; i < order; ++i) {
        r = diff_x(r);
    }
    return r;
}

inline expr diff_t(const expr &e)
{
    std::vector<monomial> raw;
    raw.reserve(e.size());
    for (const auto &mo : e.terms()) {
        if (mo.k > 0) {
            raw.push_back({mo.coef * mo.k, mo.k - 1, mo.m, mo.n});
        }
    }
    return expr::from_terms(e.get_phase(), std::move(raw), e.basis());
}

/// Integral from 0 to t of the integral from 0 to sigma: t^k -> t^(k+2) / ((k+1)(k+2)).
inline expr double_integral_t(const expr &e)
{
    std::vector<monomial> raw;
    raw.reserve(e.size());
    for (const auto &mo : e.terms()) {
        raw.push_back({mo.coef / ((mo.k + 1) * (mo.k + 2)), mo.k + 2, mo.m, mo.n});
    }
    return expr::from_terms(e.get_phase(), std::move(raw), e.basis());
}

/// sech and tanh of theta, computed from exp(-|theta|) so that large |theta|
/// keeps full relative precision in sech.
inline std::pair<real, real> sech_tanh(const real &theta)
{
    const real e = exp(-abs(theta));
    const real e2 = e * e;
    const real den = 1 + e2;
    real s = 2 * e / den;
    real tau = (1 - e2) / den;
    if (theta < 0) {
        tau = -tau;
    }
    return {std::move(s), std::move(tau)};
}

/// Point evaluation at the current working precision. Reentrant.
inline real eval(const expr &e, const real &x, const real &t)
{
    if (e.is_zero()) {
        return real(0);
    }
    unsigned max_k = 0;
    unsigned max_m = 0;
    unsigned max_n = 0;
    for (const auto &mo : e.terms()) {
        max_k = std::max(max_k, mo.k);
        max_m = std::max(max_m, mo.m);
        max_n = std::max(max_n, mo.n);
    }
    const auto [s, tau] = sech_tanh(e.get_phase().a * x + e.get_phase().b);
    auto powers = [](const real &base, unsigned top) {
        std::vector<real> p(top + 1);
        p[0] = 1;
        for (unsigned i = 1; i <= top; ++i) {
            p[i] = p[i - 1] * base;
        }
        return p;
    };
    const auto tp = powers(t, max_k);
    const auto sp = powers(s, max_m);
    const auto np = powers(tau, max_n);
    real sum = 0;
    for (const auto &mo : e.terms()) {
        sum += mo.coef * tp[mo.k] * sp[mo.m] * np[mo.n];
    }
    return sum;
}

/// Evaluation at an explicit precision; switches the process-wide precision.
inline real eval(const expr &e, const real &x, const real &t, const precision_config &cfg)
{
    precision_scope scope(cfg);
    return eval(e, real(x), real(t));
}

inline real max_abs_coefficient(const expr &e)
{
    real best = 0;
    for (const auto &mo : e.terms()) {
        best = std::max(best, real(abs(mo.coef)));
    }
    return best;
}

/// Sum of |coef|: an upper bound of |e| for |t| <= 1 since |sech|, |tanh| <= 1.
inline real coefficient_norm(const expr &e)
{
    real sum = 0;
    for (const auto &mo : e.terms()) {
        sum += abs(mo.coef);
    }
    return sum;
}

/// True when every coefficient of (l - r) is within rel_tol of the larger
/// operand's largest coefficient.
inline bool approx_equal(const expr &l, const expr &r, const real &rel_tol)
{
    detail::require_compatible(l, r);
    std::vector<monomial> raw(l.terms());
    for (const auto &mo : r.terms()) {
        raw.push_back({-mo.coef, mo.k, mo.m, mo.n});
    }
    std::sort(raw.begin(), raw.end(), [](const monomial &a, const monomial &b) { return a.key() < b.key(); });
    real scale_ref = std::max(max_abs_coefficient(l), max_abs_coefficient(r));
    if (scale_ref == 0) {
        scale_ref = 1;
    }
    real acc = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        acc += raw[i].coef;
        if (i + 1 == raw.size() || raw[i + 1].key() != raw[i].key()) {
            if (abs(acc) > rel_tol * scale_ref) {
                return false;
            }
            acc = 0;
        }
    }
    return true;
}

/// Random expression for property tests and linearity audits.
inline expr random_expr(const phase &ph, std::mt19937_64 &rng, unsigned max_terms = 6, unsigned max_k = 3,
                        unsigned max_m = 6, tanh_basis basis = tanh_basis::reduced)
{
    std::uniform_int_distribution<unsigned> count(1, max_terms);
    std::uniform_int_distribution<unsigned> kd(0, max_k);
    std::uniform_int_distribution<unsigned> md(0, max_m);
    std::uniform_int_distribution<unsigned> nd(0, basis == tanh_basis::reduced ? 1 : 3);
    std::uniform_int_distribution<int> num(-999, 999);
    std::uniform_int_distribution<int> den(1, 97);
    std::vector<monomial> raw;
    const unsigned nterms = count(rng);
    for (unsigned i = 0; i < nterms; ++i) {
        int nu = num(rng);
        if (nu == 0) {
            nu = 1;
        }
        real coef = real(nu) / den(rng);
        raw.push_back({std::move(coef), kd(rng), md(rng), nd(rng)});
    }
    return expr::from_terms(ph, std::move(raw), basis);
}

/// Customization points used by the generic iteration engine.
inline expr random_element(const expr &like, std::mt19937_64 &rng)
{
    return random_expr(like.get_phase(), rng, 6, 3, 6, like.basis());
}

inline bool approx_equal_elements(const expr &l, const expr &r)
{
    return approx_equal(l, r, precision_config::pow10(10 - static_cast<long>(current_precision().digits)));
}

inline real element_norm(const expr &e)
{
    return coefficient_norm(e);
}

/// Human-readable rendering, e.g. "0.5*sech^2(th) - 0.125*t^2*sech^4(th)".
inline std::string to_string(const expr &e, std::streamsize significant = 12)
{
    if (e.is_zero()) {
        return "0";
    }
    std::ostringstream os;
    bool first = true;
    for (const auto &mo : e.terms()) {
        const bool negative = mo.coef < 0;
        if (first) {
            os << (negative ? "-" : "");
        } else {
            os << (negative ? " - " : " + ");
        }
        first = false;
        os << abs(mo.coef).str(significant, std::ios_base::fmtflags(0));
        if (mo.k == 1) {
            os << "*t";
        } else if (mo.k > 1) {
            os << "*t^" << mo.k;
        }
        if (mo.m == 1) {
            os << "*sech(th)";
        } else if (mo.m > 1) {
            os << "*sech^" << mo.m << "(th)";
        }
        if (mo.n == 1) {
            os << "*tanh(th)";
        } else if (mo.n > 1) {
            os << "*tanh^" << mo.n << "(th)";
        }
    }
    return os.str();
}

inline std::ostream &operator<<(std::ostream &os, const expr &e)
{
    return os << to_string(e);
}

} // namespace djm

#endif
