#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "djm/algebra.hpp"
#include "djm/iterate.hpp"

using namespace djm;

namespace
{

const phase ph{real(1) / 2, real(1) / 2};

operator_spec<expr> heat_like()
{
    return linear_operator<expr>("L", [](const expr &u) { return double_integral_t(diff_x(u, 2)); });
}

operator_spec<expr> square_term()
{
    return nonlinear_operator<expr>("N", [](const expr &u) { return scale(double_integral_t(mul(u, u)), real(-1)); });
}

iteration_problem<expr> sample_problem()
{
    return iteration_problem<expr>::make(expr::term(ph, real(1), 0, 2, 0), expr::term(ph, real(-1), 1, 2, 1),
                                         heat_like(), square_term());
}

real tol()
{
    return precision_config::pow10(10 - static_cast<long>(current_precision().digits));
}

} // namespace

TEST(GTerm, FirstIsNOfInitialTerm)
{
    const auto N = square_term();
    const std::vector<expr> sums{expr::term(ph, real(2), 0, 1, 0)};
    EXPECT_EQ(g_term(N, std::span<const expr>(sums), 0), N(sums[0]));
}

TEST(GTerm, DifferenceOfConsecutiveSums)
{
    const auto N = square_term();
    const expr u0 = expr::term(ph, real(1), 0, 2, 0);
    const expr u1 = expr::term(ph, real(3), 2, 4, 0);
    const std::vector<expr> sums{u0, u0 + u1};
    EXPECT_TRUE(approx_equal(g_term(N, std::span<const expr>(sums), 1), N(u0 + u1) - N(u0), tol()));
    EXPECT_THROW(g_term(N, std::span<const expr>(sums), 2), std::out_of_range);
}

TEST(GTerm, LinearNGivesNOfTerm)
{
    const auto N = linear_operator<expr>("N", [](const expr &u) { return scale(u, real(5)); });
    const expr u0 = expr::term(ph, real(1), 0, 2, 0);
    const expr u1 = expr::term(ph, real(3), 1, 3, 1);
    const std::vector<expr> sums{u0, u0 + u1};
    EXPECT_TRUE(approx_equal(g_term(N, std::span<const expr>(sums), 1), N(u1), tol()));
}

TEST(Linearity, RejectsUndeclaredLinear)
{
    auto L = nonlinear_operator<expr>("L", [](const expr &u) { return u; });
    EXPECT_THROW(iteration_problem<expr>::make(expr::term(ph, real(1), 0, 2, 0), expr(ph), L, square_term()),
                 linearity_error);
}

TEST(Linearity, RejectsMisdeclaredOperator)
{
    auto L = linear_operator<expr>("L", [](const expr &u) { return mul(u, u); });
    EXPECT_FALSE(audit_linearity(L, expr::term(ph, real(1), 0, 2, 0)));
    EXPECT_THROW(iteration_problem<expr>::make(expr::term(ph, real(1), 0, 2, 0), expr(ph), L, square_term()),
                 linearity_error);
}

TEST(Linearity, AffineOperatorFailsAudit)
{
    auto L = linear_operator<expr>("L", [](const expr &u) { return u + expr::constant(ph, real(1)); });
    EXPECT_FALSE(audit_linearity(L, expr::term(ph, real(1), 0, 2, 0)));
}

TEST(Linearity, AcceptsGenuineLinearOperator)
{
    EXPECT_TRUE(audit_linearity(heat_like(), expr::term(ph, real(1), 0, 2, 0)));
    EXPECT_NO_THROW(sample_problem());
}

TEST(Series, SingleTermIsF1)
{
    const auto prob = sample_problem();
    const auto sol = mdjm_series(prob, 1);
    ASSERT_EQ(sol.size(), 1u);
    EXPECT_EQ(sol.term(0), prob.f1);
    EXPECT_THROW(mdjm_series(prob, 0), std::invalid_argument);
}

TEST(Series, FirstIterateInjectsF2)
{
    const auto prob = sample_problem();
    const auto sol = mdjm_series(prob, 2);
    EXPECT_EQ(sol.term(1), prob.f2 + prob.L(prob.f1) + prob.N(prob.f1));
}

TEST(Series, RecurrenceHoldsTermByTerm)
{
    const auto prob = sample_problem();
    const auto sol = mdjm_series(prob, 5);
    const auto &sums = sol.partial_sums();
    for (std::size_t m = 1; m + 1 < sol.size(); ++m) {
        const expr want = prob.L(sol.term(m)) + g_term(prob.N, std::span<const expr>(sums), m);
        EXPECT_TRUE(approx_equal(sol.term(m + 1), want, tol())) << "m=" << m;
    }
}

TEST(Series, PlainMethodRequiresUnsplitSource)
{
    const auto prob = sample_problem();
    EXPECT_THROW(djm_series(prob, 3), std::invalid_argument);
    const auto sol = run_method(method::djm, prob, 3);
    EXPECT_EQ(sol.term(0), prob.source());
    EXPECT_EQ(sol.tag(), method::djm);
}

TEST(Series, PartialSumOutOfRange)
{
    const auto sol = mdjm_series(sample_problem(), 3);
    EXPECT_THROW(sol.partial_sum(3), std::out_of_range);
    EXPECT_EQ(partial_sum(sol, 2), sol.partial_sums().back());
}

TEST(Series, Deterministic)
{
    const auto a = mdjm_series(sample_problem(), 5);
    const auto b = mdjm_series(sample_problem(), 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.term(i), b.term(i));
    }
}

TEST(Series, EarlyStopWhenTermsVanish)
{
    auto zero = linear_operator<expr>("L", [](const expr &u) { return u.zero_like(); });
    auto nzero = nonlinear_operator<expr>("N", [](const expr &u) { return u.zero_like(); });
    const auto prob = iteration_problem<expr>::make(expr::term(ph, real(1), 0, 2, 0), expr(ph), zero, nzero);
    const auto sol = mdjm_series(prob, 10, iteration_options{true, real("1e-30")});
    EXPECT_EQ(sol.size(), 2u);
    EXPECT_EQ(mdjm_series(prob, 10).size(), 10u);
}

// Property suites

TEST(IterateProperties, TelescopingSumOfG)
{
    std::mt19937_64 rng(7);
    const auto N = square_term();
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<expr> sums;
        expr running(ph);
        for (int i = 0; i < 5; ++i) {
            running = running + random_expr(ph, rng, 4, 2, 4);
            sums.push_back(running);
        }
        for (std::size_t m = 0; m < sums.size(); ++m) {
            expr total(ph);
            for (std::size_t i = 0; i <= m; ++i) {
                total = total + g_term(N, std::span<const expr>(sums), i);
            }
            EXPECT_TRUE(approx_equal(total, N(sums[m]), tol())) << "m=" << m;
        }
    }
}

TEST(IterateProperties, LinearityAuditOnRandomScaledOperators)
{
    std::mt19937_64 rng(8);
    for (int i = 0; i < 5; ++i) {
        const expr w = random_expr(ph, rng, 3, 1, 3);
        auto L = linear_operator<expr>("L", [w](const expr &u) { return double_integral_t(mul(w, diff_x(u))); });
        EXPECT_TRUE(audit_linearity(L, expr::term(ph, real(1), 0, 2, 0), 20, 1000 + i));
        auto Q = linear_operator<expr>("Q", [w](const expr &u) { return mul(u, u + w); });
        EXPECT_FALSE(audit_linearity(Q, expr::term(ph, real(1), 0, 2, 0), 20, 1000 + i));
    }
}

TEST(IterateProperties, MethodsCoincideWhenF2IsZero)
{
    std::mt19937_64 rng(9);
    for (int i = 0; i < 5; ++i) {
        const expr f = random_expr(ph, rng, 3, 0, 4);
        const auto prob = iteration_problem<expr>::make(f, expr(ph), heat_like(), square_term());
        const auto a = run_method(method::djm, prob, 4);
        const auto b = run_method(method::mdjm, prob, 4);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_EQ(a.term(k), b.term(k)) << "term " << k;
        }
    }
}

TEST(Diagnostics, NormsRatiosAndErrors)
{
    auto zero = linear_operator<expr>("L", [](const expr &u) { return u.zero_like(); });
    auto nzero = nonlinear_operator<expr>("N", [](const expr &u) { return u.zero_like(); });
    const auto prob = iteration_problem<expr>::make(expr::term(ph, real(2), 0, 0, 0), expr::term(ph, real(1), 1, 0, 0),
                                                    zero, nzero);
    const auto sol = mdjm_series(prob, 3);
    const std::vector<grid_point> grid{{real(0), real("0.5")}, {real(1), real(1)}};
    const auto rep = convergence_diagnostics(sol, std::span<const grid_point>(grid),
                                             [](const real &, const real &t) { return 2 + t; });
    ASSERT_EQ(rep.sup_norms.size(), 3u);
    EXPECT_EQ(rep.sup_norms[0], 2);
    EXPECT_EQ(rep.sup_norms[1], 1);
    EXPECT_EQ(rep.sup_norms[2], 0);
    ASSERT_EQ(rep.ratios.size(), 2u);
    EXPECT_EQ(rep.ratios[0], real(1) / 2);
    EXPECT_EQ(rep.ratios[1], 0);
    ASSERT_EQ(rep.errors.size(), 2u);
    EXPECT_EQ(rep.errors[0][0], real("0.5"));
    EXPECT_EQ(rep.errors[0][1], 0);
    EXPECT_THROW(convergence_diagnostics(sol, std::span<const grid_point>()), std::invalid_argument);
}

TEST(Diagnostics, InfiniteRatioAfterZeroTerm)
{
    auto zero = linear_operator<expr>("L", [](const expr &u) { return u.zero_like(); });
    auto nzero = nonlinear_operator<expr>("N", [](const expr &u) { return u.zero_like(); });
    const auto prob = iteration_problem<expr>::make(expr(ph), expr::term(ph, real(1), 1, 0, 0), zero, nzero);
    const auto sol = mdjm_series(prob, 2);
    const std::vector<grid_point> grid{{real(0), real(1)}};
    const auto rep = convergence_diagnostics(sol, std::span<const grid_point>(grid));
    EXPECT_TRUE(isinf(rep.ratios[0]));
}
