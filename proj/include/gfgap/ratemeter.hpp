#pragma once

#include <string>
#include <vector>

#include "gfgap/eigen.hpp"
#include "gfgap/grid.hpp"
#include "gfgap/logreal.hpp"
#include "gfgap/semigroup.hpp"

namespace gf {

// ---------------------------------------------------------------------------
// Empirical convergence rate: evolve a scaled state m_t, track the weighted
// total-variation distance d(t) = ||m_t - <phi, n_0> N||_V, and fit
// log d(t) ~ log c - rho t on the window [T/3, T].  The fit is rejected
// (rho reported as absent) when it has fewer than 10 snapshots, r^2 < 0.98,
// or the residuals oscillate coherently -- the signature of a peripheral
// spectrum (mitosis with linear growth: period log 2 in t).
// ---------------------------------------------------------------------------

struct RateFit {
    bool accepted = false;
    double rho_emp = 0.0;   // decay rate from the fit (valid iff accepted)
    double intercept = 0.0;
    double r_squared = 0.0;
    double window_lo = 0.0, window_hi = 0.0;
    int n_snapshots = 0;
    bool oscillation_detected = false;
    double oscillation_period = 0.0;  // dominant period of the residual, if any
    double residual_amplitude = 0.0;  // detrended amplitude / mean level
    std::vector<double> times;
    std::vector<double> distances;
    std::string initial_descriptor;  // where the initial mass sat (peak node)
    std::string diagnostic;
};

struct RateOptions {
    double dt = 0.0;           // 0: auto from the stability bound
    int snapshots = 60;        // distance samples across [0, T]
    double floor = 1e-13;      // distances at/below this are dropped from the fit
    SplitScheme splitting = SplitScheme::Strang;
};

// Evolve n0 (scaled dynamics, eigenvalue lambda from `triple`) to time T and
// fit the decay of the V-weighted distance to <phi, n0> N.  The reference N
// is used exactly as given -- pass a same-grid discrete eigenstate so the
// distance decays to roundoff instead of saturating at truncation level.
RateFit measure_rate(const Coefficients& coeffs, const FragmentKernel& kernel,
                     const EigenTriple& triple, const GridMeasure& n0,
                     double T, const WeightSpec& V, const RateOptions& opt = {});

struct RateComparison {
    RateFit fit;
    LogReal rho_cert;
    bool rate_confirmed = false;   // accepted fit and rho_emp >= rho_cert
    double log_gap = 0.0;          // log(rho_emp) - log(rho_cert), log-domain
    std::string diagnostic;
};

// The headline check: the observed rate must dominate the certified one.
// Comparison runs in the log domain so certificates with rho ~ e^{-4e7}
// compare meaningfully against O(1) empirical rates.
RateComparison rate_vs_certificate(const RateFit& fit, LogReal rho_cert);

}  // namespace gf
