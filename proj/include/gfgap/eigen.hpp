#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gfgap/grid.hpp"
#include "gfgap/model.hpp"
#include "gfgap/semigroup.hpp"

namespace gf {

// ---------------------------------------------------------------------------
// Perron eigenelements (lambda, N, phi):
//   dual problem   g phi' + B(x) int_0^1 phi(zx) p(dz) - (B + lambda) phi = 0
//   on (0, R) with phi_R(R) = 0, solved on a truncated window and pushed to
//   the limit by R-doubling; N extracted as the fixed point of the
//   conservative semigroup; closed forms for the two explicit families.
// ---------------------------------------------------------------------------

struct DualSolveOptions {
    int n_cells = 600;          // cells per truncated solve
    double x_min_factor = 1e-5; // window bottom = x_min_factor * R
    int max_iterations = 200;
    double shift_pad = 0.1;     // inverse-iteration shift = lambda*(1+pad)
};

struct TruncatedDualSolution {
    double R = 0.0;
    double lambda_R = 0.0;
    GridPtr grid;
    std::vector<double> phi;  // at nodes, positive on (0,R), phi(R) = 0
    double A_norm = 0.0;      // sup over [0, A_norm] of phi equals 1
    double residual = 0.0;    // sup|L*phi - lambda phi| / sup|phi|
    double bound_C = 0.0;     // empirical C with phi <= C (1 + x^k)
    double k = 2.0;           // weight exponent used for the bound
};

// Smallest grid point beyond which
//   rho(x) = x^{k-1} (-k g(x) - B(x) x^{1-k} + (1 - p_k) B(x) x)
// is positive and stays positive on all larger probes; the dual transport
// pushes the weight 1+x^k downward beyond this point.  Throws when no such
// point exists inside the probe window.
double crossover_A(const Coefficients& coeffs, const FragmentKernel& kernel,
                   double k);

// Perron pair of the upwinded dual operator on (0, R] with phi(R) = 0,
// normalized to sup_{[0,A]} phi = 1.  Shifted inverse power iteration on
// the dense lower-triangular-plus-superdiagonal matrix (LU per shift).
TruncatedDualSolution solve_truncated_dual(const Coefficients& coeffs,
                                           const FragmentKernel& kernel,
                                           double R, double k,
                                           const DualSolveOptions& opt = {});

struct DualEigen {
    double lambda = 0.0;
    GridPtr grid;              // finest solve
    std::vector<double> phi;   // finest solve, sup_{[0,A]} = 1
    double A_norm = 0.0;
    double k = 2.0;
    std::vector<double> R_sequence;
    std::vector<double> lambda_sequence;
    double residual = 0.0;     // matrix residual of the finest solve
    bool converged = false;

    // phi evaluated anywhere: interior by log-linear interpolation, outside
    // the solve window by the end-segment power-law asymptotics.
    double phi_at(double x) const;
};

DualEigen dual_eigen(const Coefficients& coeffs, const FragmentKernel& kernel,
                     double tol, double R0, double k,
                     int max_doublings = 8, const DualSolveOptions& opt = {});

struct EigenTriple {
    double lambda = 0.0;
    GridMeasure N;             // nonnegative, sum N = 1
    std::vector<double> phi;   // at N's grid nodes, sum phi*N = 1
    double A_norm = 0.0;       // [0,A] window of the dual sup-normalization
    bool converged = true;     // false: distance plateaued (no limit shape)
    double residual_N = 0.0;   // shape-settling defect of N per unit time
    double residual_phi = 0.0; // dual matrix residual carried from the solve
    std::string diagnostic;
};

struct DirectEigenOptions {
    double dt = 0.0;             // 0: auto from stability
    double tol = 1e-10;          // consecutive-snapshot weighted-TV gate
    double check_interval = 0.25;
    double T_max = 200.0;
    SplitScheme splitting = SplitScheme::Strang;
};

// Fixed point of the conservative semigroup built from (lambda, phi); N is
// the fixed point divided by phi, rescaled to sum N = 1 and phi rescaled to
// sum phi*N = 1.  converged = false when the consecutive-snapshot distance
// plateaus above tol (the oscillating mitosis + linear-growth case).
EigenTriple direct_eigen(const Coefficients& coeffs, const FragmentKernel& kernel,
                         const DualEigen& dual, GridPtr grid,
                         const DirectEigenOptions& opt = {});

// ---------------------------------------------------------------------------
// Closed forms.
//   SelfSimilar(g0, b0, gamma): g = g0 x, B = b0 x^gamma, uniform kernel:
//     lambda = g0,
//     N(x)   = (b0/(gamma g0))^{1/gamma} * gamma/Gamma(1/gamma)
//              * exp(-(b0/(gamma g0)) x^gamma),
//     phi(x) = (b0/(gamma g0))^{1/gamma} * Gamma(1/gamma)/Gamma(2/gamma) * x.
//   ConstantMitosis: g = 1, B = 1, equal mitosis:
//     lambda = 1, phi = 1,
//     N(x)   = sum_{n>=0} (-1)^n alpha_n exp(-2^{n+1} x),
//     alpha_n = 2 alpha_{n-1}/(2^n - 1), alpha_0 fixed by sum N = 1.
// ---------------------------------------------------------------------------

struct ExplicitCase {
    enum class Kind { SelfSimilar, ConstantMitosis };
    Kind kind = Kind::SelfSimilar;
    double g0 = 1.0, b0 = 1.0, gamma = 1.0;
    int n_terms = 25;  // ConstantMitosis series truncation

    static ExplicitCase self_similar(double g0, double b0, double gamma) {
        return {Kind::SelfSimilar, g0, b0, gamma, 25};
    }
    static ExplicitCase constant_mitosis(int n_terms = 25) {
        return {Kind::ConstantMitosis, 1.0, 1.0, 1.0, n_terms};
    }
};

EigenTriple explicit_eigen(const ExplicitCase& c, GridPtr grid);

// Pointwise closed-form densities (cell masses above use exact or high-order
// per-cell integrals of these).
double explicit_N_density(const ExplicitCase& c, double x);
double explicit_phi_value(const ExplicitCase& c, double x);
// Coefficients alpha_n of the mitosis series, alpha_0 normalized.
std::vector<double> mitosis_series_coefficients(int n_terms);

}  // namespace gf
