#include <vector>

#include <gtest/gtest.h>

#include "djm/boussinesq.hpp"

using namespace djm;

namespace
{

real tol()
{
    return precision_config::pow10(10 - static_cast<long>(current_precision().digits));
}

const std::vector<real> sample_xs{real(-7), real("-1.5"), real(0), real("0.4"), real(3), real(12)};

boussinesq_params bad_boussinesq()
{
    return {real(-1), real(3), real(-1)};
}

} // namespace

TEST(Example1, InitialProfileValue)
{
    const auto bp = build_example1({real(1)});
    const real want("0.393223866482963705074849467171818051244534570854627155152654");
    EXPECT_LT(abs(eval(bp.problem.f1, real(0), real(0)) - want), real("1e-58"));
    EXPECT_EQ(bp.problem.f1, expr::term(phase{real(1) / 2, real(1) / 2}, real("0.5"), 0, 2, 0));
}

TEST(Example1, VelocityVariants)
{
    const real c(2);
    const real rc = sqrt(c);
    const auto consistent = build_example1({c});
    const auto printed = build_example1({c, initial_velocity::printed});
    EXPECT_LT(abs(*consistent.problem.f2.coefficient(1, 2, 1) + c * c * rc / 4), tol());
    EXPECT_LT(abs(*printed.problem.f2.coefficient(1, 2, 1) + c * c * rc / 2), tol());
}

TEST(Example1, RejectsNonPositiveC)
{
    EXPECT_THROW(build_example1({real(0)}), std::domain_error);
    EXPECT_THROW(build_example1({real(-1)}), std::domain_error);
}

TEST(Example1, StaticProfileAtUnitC)
{
    // For c = 1 the initial profile is itself a static solution, so the first
    // iterate is exactly the injected velocity term.
    const auto bp = build_example1({real(1)});
    const auto sol = mdjm_series(bp.problem, 2);
    EXPECT_TRUE(approx_equal(sol.term(1), bp.problem.f2, tol()));
}

TEST(Example1, SeriesAgreesWithNumericReferenceAtSmallTime)
{
    const auto cal = reference_example1({real(1)});
    const expr s3 = example1_partial_sum({real(1)}, 4);
    EXPECT_LT(abs(eval(s3, real(0), real("0.1")) - cal.reference(real(0), real("0.1"))), real("1e-9"));
}

TEST(General, AmplitudeAndScale)
{
    const auto bp = build_general({real(-1), real(3), real(-1)}, {real(2), real(0)});
    EXPECT_LT(abs(bp.problem.f1.get_phase().a - sqrt(real(3)) / 2), tol());
    EXPECT_LT(abs(bp.amplitude - 3 * sqrt(real(3)) / 6), tol());
    const auto neg = build_general({real(-1), real(3), real(-1)}, {real(2), real(0), 1, -1});
    EXPECT_EQ(neg.amplitude, -bp.amplitude);
}

TEST(General, DomainErrors)
{
    EXPECT_THROW(build_general({real(-1), real(3), real(1)}, {real(2), real(0)}), std::domain_error);
    EXPECT_THROW(build_general({real(-1), real(0), real(-1)}, {real(2), real(0)}), std::domain_error);
    EXPECT_THROW(build_general({real(-1), real(3), real(0)}, {real(2), real(0)}), std::domain_error);
    EXPECT_THROW(build_general({real(-1), real(3), real(-1)}, {real(2), real(0), 2}), std::invalid_argument);
}

TEST(General, ZeroSpeedHasNoVelocityTerm)
{
    const auto bp = build_general({real(1), real(3), real(-1)}, {real(0), real("0.3")});
    EXPECT_TRUE(bp.problem.f2.is_zero());
}

TEST(General, FirstIterateMatchesHandDerivation)
{
    const boussinesq_params prm{real(-1), real(3), real(-1)};
    const auto bp = build_general(prm, {real(2), real("0.25")});
    const auto sol = mdjm_series(bp.problem, 2);
    const real A = bp.amplitude;
    const real k = bp.problem.f1.get_phase().a;
    const real k2 = k * k;
    const real k4 = k2 * k2;
    // (s^2)_xx = k^2 (4 s^2 - 6 s^4); (s^2)_xxxx = k^4 (16 s^2 - 120 s^4 + 120 s^6);
    // (s^4)_xx = k^2 (16 s^4 - 20 s^6). Each is integrated twice in t: factor t^2 / 2.
    const real c2 = -(prm.p * A * 4 * k2 + prm.r * A * 16 * k4) / 2;
    const real c4 = -(prm.p * A * -6 * k2 + prm.r * A * -120 * k4 + prm.q * A * A * 16 * k2) / 2;
    const real c6 = -(prm.r * A * 120 * k4 + prm.q * A * A * -20 * k2) / 2;
    const phase ph = bp.problem.f1.get_phase();
    const expr want = bp.problem.f2 + expr::from_terms(ph, {{c2, 2, 2, 0}, {c4, 2, 4, 0}, {c6, 2, 6, 0}});
    EXPECT_TRUE(approx_equal(sol.term(1), want, tol())) << to_string(sol.term(1)) << "\n" << to_string(want);
}

TEST(General, SolitaryFormIsExactAndOperatorSignsAgreeWithTheResidual)
{
    const boussinesq_params prm = bad_boussinesq();
    solitary_wave_params wave{real(2), real("0.25"), 1, 1, amplitude_form::solitary};
    const auto bp = build_general(prm, wave);
    const auto cal = reference_general(bp);
    EXPECT_EQ(cal.chosen, "travelling-wave");
    EXPECT_FALSE(cal.used_fallback);

    const auto sol = mdjm_series(bp.problem, 4);
    const expr s3 = sol.partial_sum(3);
    const real t("0.05");
    real err = 0;
    for (const auto &x : sample_xs) {
        err = std::max(err, real(abs(eval(s3, x, t) - cal.reference(x, t))));
    }
    EXPECT_LT(err, real("1e-6"));

    // Flipping the sign of L breaks the agreement by orders of magnitude.
    auto [L, N] = boussinesq_operators(bp.pde);
    auto flipped = linear_operator<expr>("-L", [L = L](const expr &u) { return -L(u); });
    const auto wrong = iteration_problem<expr>::make(bp.problem.f1, bp.problem.f2, flipped, N);
    const expr w3 = mdjm_series(wrong, 4).partial_sum(3);
    real werr = 0;
    for (const auto &x : sample_xs) {
        werr = std::max(werr, real(abs(eval(w3, x, t) - cal.reference(x, t))));
    }
    EXPECT_GT(werr, 100 * err);
}

TEST(General, PrintedFormWithIllPosedLinearPartFailsCalibration)
{
    const auto bp = build_general(bad_boussinesq(), {real(2), real(0)});
    EXPECT_THROW(reference_general(bp), calibration_error);
}

// Property suites

TEST(BoussinesqProperties, DoublingQHalvesAmplitude)
{
    for (const char *q : {"1", "3", "-2.5"}) {
        for (auto form : {amplitude_form::printed, amplitude_form::solitary}) {
            const solitary_wave_params wave{real("1.5"), real(0), 1, 1, form};
            const auto a = build_general({real(-1), real(q), real(-1)}, wave);
            const auto b = build_general({real(-1), 2 * real(q), real(-1)}, wave);
            EXPECT_LT(abs(b.amplitude - a.amplitude / 2), tol());
        }
    }
}

TEST(BoussinesqProperties, LaterTermsVanishAtTimeZero)
{
    std::vector<boussinesq_problem> problems;
    problems.push_back(build_example1({real(1)}));
    problems.push_back(build_example1({real(2), initial_velocity::printed}));
    problems.push_back(build_general(bad_boussinesq(), {real(2), real("0.3"), -1}));
    for (const auto &bp : problems) {
        for (auto m : {method::djm, method::mdjm}) {
            const auto sol = run_method(m, bp.problem, 4);
            for (std::size_t i = 1; i < sol.size(); ++i) {
                for (const auto &x : sample_xs) {
                    EXPECT_EQ(eval(sol.term(i), x, real(0)), 0) << bp.label << " term " << i;
                }
            }
        }
    }
}

TEST(BoussinesqProperties, PartialSumsCarryTheInitialData)
{
    for (const char *c : {"0.5", "1", "2"}) {
        const auto bp = build_example1({real(c)});
        const expr velocity = diff_t(bp.problem.source());
        for (auto m : {method::djm, method::mdjm}) {
            const auto sol = run_method(m, bp.problem, 4);
            const expr s = sol.partial_sum(3);
            const expr st = diff_t(s);
            for (const auto &x : sample_xs) {
                EXPECT_LT(abs(eval(s, x, real(0)) - eval(bp.problem.f1, x, real(0))), tol());
                EXPECT_LT(abs(eval(st, x, real(0)) - eval(velocity, x, real(0))), tol());
            }
        }
    }
}

// Reference solutions

TEST(Reference, EveryReadingReproducesTheInitialProfile)
{
    const real c(2);
    const auto bp = build_example1({c});
    for (const auto &name : example1_reading_names()) {
        const auto ref = example1_reading(c, name, real("0.7"));
        for (const auto &x : sample_xs) {
            EXPECT_LT(abs(ref(x, real(0)) - eval(bp.problem.f1, x, real(0))), tol()) << name;
        }
    }
    EXPECT_THROW(example1_reading(c, "cosh"), std::invalid_argument);
}

TEST(Reference, ExampleCalibrationFallsBackToNumeric)
{
    for (const char *c : {"1", "2"}) {
        const auto cal = reference_example1({real(c)});
        EXPECT_EQ(cal.passing_closed_forms, 0u) << c;
        EXPECT_TRUE(cal.used_fallback);
        EXPECT_EQ(cal.chosen, "numeric");
        EXPECT_NE(cal.reference.provenance.find("numeric-fallback"), std::string::npos);
        ASSERT_EQ(cal.candidates.size(), 4u);
        EXPECT_TRUE(cal.candidates.back().passes());
    }
}

TEST(Reference, FittedSpeedRecoversStaticSolution)
{
    // At c = 1 the residual-optimal linear phase is the static profile.
    const auto bp = build_example1({real(1)});
    auto settings = calibration_settings::defaults();
    const real v = fit_linear_speed(real(1), bp.pde, settings.residual_points, diff_t(bp.problem.source()));
    EXPECT_LT(abs(v), real("1e-30"));
}

TEST(Reference, NoFallbackRaises)
{
    auto settings = calibration_settings::defaults();
    settings.allow_fallback = false;
    EXPECT_THROW(reference_example1({real(1)}, settings), calibration_error);
}

TEST(Tables, TimeZeroRowsAndCurves)
{
    const real c(1);
    const expr s3 = example1_partial_sum({c}, 4);
    const auto closed = example1_reading(c, "sqrt(1+c*t)");
    const std::vector<real> xs{real(0), real(10), real(20)};
    const std::vector<real> ts{real(0), real("0.1")};
    const auto rows = error_table(s3, closed.evaluate, xs, ts);
    ASSERT_EQ(rows.size(), 6u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(rows[i].t, 0);
        EXPECT_EQ(rows[i].abs_error, 0);
    }
    const auto curve = figure_data(s3, closed.evaluate, xs, real(0));
    for (const auto &smp : curve) {
        EXPECT_EQ(smp.approx, smp.reference);
    }
    const auto numeric = reference_example1({c});
    for (const auto &row : error_table(s3, numeric.reference.evaluate, xs, std::vector<real>{real(0)})) {
        EXPECT_LT(row.abs_error, real("1e-15"));
    }
}
