#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gfgap/grid.hpp"
#include "gfgap/model.hpp"
#include "gfgap/semigroup.hpp"

namespace gf {

// ---------------------------------------------------------------------------
// Foster-Lyapunov drift certificates: for the conservative dynamics with
// weight V_f, after time t0,
//   integral V_f f(t0)  <=  gamma * integral V_f f(0) + K_d * integral f(0),
// with gamma = exp(-C1 t0).  The three coefficient regimes have explicit
// drift potentials Phi; C2 bounds their grid sup (times a 1.05 safety
// factor) and K_d follows the regime recipe.
// ---------------------------------------------------------------------------

enum class DriftRegime { LinearGrowth, SublinearAt0, SuperlinearAt0 };

struct DriftCertificate {
    DriftRegime regime = DriftRegime::LinearGrowth;
    WeightSpec weight;      // m-level weight V (x^k + x^K family)
    double C1 = 0.0;
    double C2 = 0.0;
    double K_d = 0.0;       // C2/C1 (linear) or 1 + C2/C1 (other regimes)
    double lambda = 0.0;    // only used by the non-linear regimes (C1)
    std::string phi_provenance;  // closed-form | dual-solve

    double gamma_of_t0(double t0) const;
    // f-level weight V_f = V/phi evaluated pointwise.
    std::function<double(double)> v_f;
};

// Linear-growth drift potential (g(x) = x):
//   Phi(x) = c1 B x^{K-1} + c2 x^{K-1} + c3 B x^{k-1} + c4 x^{k-1}
// with c1 = (1-K)/(1+K), c2 = K - (k+1)/2, c3 = (1-k)/(1+k), c4 = (k-1)/2.
// Requires -1 < k < 1 < K_w.
double phi_linear(double x, double k, double K_w, const Coefficients& coeffs);

// Sublinear-at-0 potential: Phi = (p_K - 1) x^K B + K x^{K-1} g.
double phi_sublinear(double x, double K_w, const Coefficients& coeffs,
                     const FragmentKernel& kernel);

// Superlinear-at-0 potential:
//   Phi = (p_k - 1) x^k B + (p_K - 1) x^K B + k x^{k-1} g + K x^{K-1} g.
double phi_superlinear(double x, double k, double K_w, const Coefficients& coeffs,
                       const FragmentKernel& kernel);

struct DriftOptions {
    int probes = 10000;
    double probe_lo = 1e-6;
    double probe_hi = 1e6;
    double safety = 1.05;
};

// C1 = (1-k)/2 in the linear regime, lambda otherwise; C2 = safety * grid
// sup of Phi (linear) or Phi/phi (other regimes, requires phi).  Throws when
// the sup is dominated by the window ends (hypothesis failure) or phi is
// missing where required.
DriftCertificate drift_constants(DriftRegime regime, const WeightSpec& weight,
                                 const Coefficients& coeffs,
                                 const FragmentKernel& kernel,
                                 const std::function<double(double)>& phi,
                                 double lambda, const DriftOptions& opt = {});

struct DriftVerification {
    int trials = 0;
    int violations = 0;
    double worst_ratio = 0.0;  // max over trials of LHS/RHS
    std::string worst_initial;
    bool passed() const { return violations == 0; }
};

// Empirical check of the integrated drift inequality for random normalized
// initial states (plus near-Diracs at both window ends), conservative mode,
// 1% slack.
DriftVerification verify_drift(const DriftCertificate& cert,
                               const Coefficients& coeffs,
                               const FragmentKernel& kernel, GridPtr grid,
                               const std::function<double(double)>& phi,
                               double lambda, double t0, int trials,
                               double dt = 0.0, unsigned seed = 42);

}  // namespace gf
