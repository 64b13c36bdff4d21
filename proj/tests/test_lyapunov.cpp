#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "gfgap/eigen.hpp"
#include "gfgap/grid.hpp"
#include "gfgap/lyapunov.hpp"
#include "gfgap/model.hpp"
#include "gfgap/semigroup.hpp"

using namespace gf;

// ===========================================================================
// Drift potentials
// ===========================================================================

TEST_CASE("linear-growth potential matches its closed form for k=0, K=2") {
    // coefficients collapse to c1 = -1/3, c2 = 3/2, c3 = 1, c4 = -1/2, so
    // with B = x^b:  Phi(x) = -x^{b+1}/3 + (3/2) x + x^{b-1} - 1/(2x)
    for (double b : {0.5, 1.0, 2.0, 4.0}) {
        const Coefficients c = Coefficients::power_law(1.0, 1.0, b, 1.0);
        for (double x : {0.03, 0.3, 1.0, 2.7, 15.0}) {
            const double expect = -std::pow(x, b + 1.0) / 3.0 + 1.5 * x +
                                  std::pow(x, b - 1.0) - 0.5 / x;
            CHECK(phi_linear(x, 0.0, 2.0, c) ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
    }

    // exponent guards
    const Coefficients c = Coefficients::power_law(1.0, 1.0, 1.0, 1.0);
    CHECK_THROWS_AS(phi_linear(1.0, 1.5, 2.0, c), std::invalid_argument);
    CHECK_THROWS_AS(phi_linear(1.0, 0.0, 0.9, c), std::invalid_argument);
}

TEST_CASE("without fragmentation the potential turns positive and is refused") {
    // B = 0 leaves Phi = (3/2) x - 1/(2x): negative only below 1/sqrt(3),
    // so the sup sits at the window end and no certificate exists.
    const Coefficients c = Coefficients::power_law(1.0, 1.0, 0.0, 0.0);
    const double root = 1.0 / std::sqrt(3.0);
    CHECK(phi_linear(root, 0.0, 2.0, c) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(phi_linear(0.95 * root, 0.0, 2.0, c) < 0.0);
    CHECK(phi_linear(1.05 * root, 0.0, 2.0, c) > 0.0);

    CHECK_THROWS_AS(drift_constants(DriftRegime::LinearGrowth,
                                    WeightSpec::selfsim_quadratic(), c,
                                    FragmentKernel::uniform(), {}, 0.0),
                    std::runtime_error);
}

TEST_CASE("sublinear and superlinear potentials evaluate their moments") {
    const FragmentKernel uni = FragmentKernel::uniform();
    // uniform kernel: p_s = 2/(s+1), so p_2 - 1 = -1/3 and p_0 - 1 = 1
    const Coefficients sub = Coefficients::power_law(0.5, 1.0, 1.0, 1.0);
    CHECK(phi_sublinear(1.0, 2.0, sub, uni) ==
          doctest::Approx(5.0 / 3.0).epsilon(1e-14));

    const Coefficients sup = Coefficients::power_law(2.0, 1.0, 1.0, 1.0);
    CHECK(phi_superlinear(1.0, 0.0, 2.0, sup, uni) ==
          doctest::Approx(8.0 / 3.0).epsilon(1e-14));

    // mitosis: p_2 = 1/2
    const FragmentKernel mit = FragmentKernel::mitosis();
    CHECK(phi_sublinear(1.0, 2.0, sub, mit) ==
          doctest::Approx(-0.5 + 2.0).epsilon(1e-14));
}

// ===========================================================================
// Drift constants
// ===========================================================================

TEST_CASE("linear-regime constants carry the frozen sups and identities") {
    const FragmentKernel uni = FragmentKernel::uniform();
    const WeightSpec W = WeightSpec::selfsim_quadratic();

    // C2 = 1.05 * sup Phi over the probe lattice, frozen per exponent b;
    // every sup stays far below the coarse envelope 5 * (15/2)^{1/b + b/2}
    const double frozen_C2[] = {5.0176383697424924, 2.5953710466863336,
                                2.4410466179748758, 2.8984797444870947};
    const double bs[] = {0.5, 1.0, 2.0, 4.0};
    for (int i = 0; i < 4; ++i) {
        const Coefficients c = Coefficients::power_law(1.0, 1.0, bs[i], 1.0);
        const DriftCertificate cert =
            drift_constants(DriftRegime::LinearGrowth, W, c, uni, {}, 0.0);
        CHECK(cert.C1 == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(cert.C2 == doctest::Approx(frozen_C2[i]).epsilon(1e-12));
        CHECK(cert.K_d == doctest::Approx(cert.C2 / cert.C1).epsilon(1e-15));
        const double envelope =
            5.0 * std::pow(7.5, 1.0 / bs[i] + 0.5 * bs[i]);
        CHECK(cert.C2 / 1.05 <= envelope);
        CHECK(cert.phi_provenance == "closed-form");
        // f-level weight is V/phi with phi = x
        CHECK(cert.v_f(2.0) == doctest::Approx(2.5).epsilon(1e-12));
        // gamma at the canonical horizon t0 = 2 log 2 is exactly 1/2
        CHECK(cert.gamma_of_t0(2.0 * std::log(2.0)) ==
              doctest::Approx(0.5).epsilon(1e-15));
    }

    // the recipe is specific to g(x) = x
    const Coefficients scaled = Coefficients::power_law(1.0, 2.0, 1.0, 1.0);
    CHECK_THROWS_AS(
        drift_constants(DriftRegime::LinearGrowth, W, scaled, uni, {}, 0.0),
        std::invalid_argument);
}

TEST_CASE("non-linear regimes demand the dual eigenfunction and lambda") {
    const FragmentKernel uni = FragmentKernel::uniform();
    const WeightSpec W = WeightSpec::selfsim_quadratic();
    const Coefficients c = Coefficients::power_law(0.5, 1.0, 1.0, 1.0);
    CHECK_THROWS_AS(
        drift_constants(DriftRegime::SublinearAt0, W, c, uni, {}, 1.0),
        std::invalid_argument);
    CHECK_THROWS_AS(drift_constants(DriftRegime::SublinearAt0, W, c, uni,
                                    [](double x) { return x; }, 0.0),
                    std::invalid_argument);
}

TEST_CASE("sublinear growth earns a certificate through the dual solve") {
    // g = sqrt(x), B = x: no closed form, so lambda and phi come from the
    // truncated dual solves (phi(0) > 0 here, which the ratio Phi/phi
    // absorbs near the origin).
    const FragmentKernel uni = FragmentKernel::uniform();
    const Coefficients c = Coefficients::power_law(0.5, 1.0, 1.0, 1.0);
    const DualEigen dual = dual_eigen(c, uni, 1e-3, 30.0, 2.0);
    CHECK(dual.converged);
    CHECK(dual.lambda == doctest::Approx(0.953753914637).epsilon(1e-6));

    const auto phi = [&dual](double x) { return dual.phi_at(x); };
    const DriftCertificate cert =
        drift_constants(DriftRegime::SublinearAt0,
                        WeightSpec::selfsim_quadratic(), c, uni, phi,
                        dual.lambda);
    CHECK(cert.C1 == dual.lambda);
    CHECK(cert.K_d == doctest::Approx(1.0 + cert.C2 / cert.C1).epsilon(1e-15));
    CHECK(cert.phi_provenance == "dual-solve");

    GridPtr g = make_grid_ptr(1e-3, 40.0, GridSpec::log_uniform(300));
    const DriftVerification rep =
        verify_drift(cert, c, uni, g, phi, dual.lambda, 1.0, 8);
    CHECK(rep.passed());
    CHECK(rep.worst_ratio <= 0.8);  // measured 0.57
}

// ===========================================================================
// Empirical verification
// ===========================================================================

TEST_CASE("random initial states respect the integrated drift inequality") {
    const FragmentKernel uni = FragmentKernel::uniform();
    const Coefficients c = Coefficients::power_law(1.0, 1.0, 1.0, 1.0);
    const DriftCertificate cert =
        drift_constants(DriftRegime::LinearGrowth,
                        WeightSpec::selfsim_quadratic(), c, uni, {}, 0.0);

    GridPtr g = make_grid_ptr(1e-3, 40.0, GridSpec::log_uniform(300));
    const DriftVerification rep =
        verify_drift(cert, c, uni, g, [](double x) { return x; }, 1.0,
                     2.0 * std::log(2.0), 16);
    CHECK(rep.trials == 16);
    CHECK(rep.passed());
    CHECK(rep.worst_ratio <= 0.6);  // measured 0.496, at the bottom Dirac
    CHECK_FALSE(rep.worst_initial.empty());
}

TEST_CASE("the stationary profile sits well inside the drift ball") {
    // sum V_f f* approximates int (1 + x^2) e^{-x} = 3, which the theory
    // caps by K_d / (1 - gamma(t0)).
    const FragmentKernel uni = FragmentKernel::uniform();
    const Coefficients c = Coefficients::power_law(1.0, 1.0, 1.0, 1.0);
    const WeightSpec W = WeightSpec::selfsim_quadratic();
    const DriftCertificate cert =
        drift_constants(DriftRegime::LinearGrowth, W, c, uni, {}, 0.0);

    GridPtr g = make_grid_ptr(1e-4, 30.0, GridSpec::log_uniform(500));
    const EigenTriple t =
        explicit_eigen(ExplicitCase::self_similar(1.0, 1.0, 1.0), g);
    double sum = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i)
        sum += cert.v_f(g->nodes[i]) * t.phi[i] * t.N.mass[i];
    CHECK(sum == doctest::Approx(3.0).epsilon(1e-3));

    const double gamma = cert.gamma_of_t0(2.0 * std::log(2.0));
    CHECK(sum <= cert.K_d / (1.0 - gamma));
}
