#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gfgap/eigen.hpp"
#include "gfgap/grid.hpp"
#include "gfgap/logreal.hpp"
#include "gfgap/model.hpp"
#include "gfgap/semigroup.hpp"

namespace gf {

// ---------------------------------------------------------------------------
// Small-set certificates for the conservative dynamics: a time t0, a set
// C = {x : V_f(x) <= R}, a probability measure nu, and alpha > 0 with
//   F_{t0} delta_{x0} >= alpha * nu   cellwise, for every x0 in C.
// Simulated mode evolves Dirac cells from across C and intersects the
// intervals where the density clears a floor; closed-form mode reports the
// explicit self-similar constants.
// ---------------------------------------------------------------------------

struct DiracFloor {
    bool empty = true;
    double lo = 0.0, hi = 0.0;  // largest interval with density >= floor
    double floor = 0.0;          // density floor attained on [lo, hi]
    std::string diagnostic;
    // Candidate interval endpoints from the splitting construction
    // (mitosis kernel): [X_t(theta)/2, X_{t-t_B}(X_{t_B}(0)/2)].
    double candidate_lo = 0.0, candidate_hi = 0.0;
};

// Shape of the reference measure nu on the intersected interval.
enum class NuShape {
    UniformInX,   // nu(dy) ~ 1_{[lo,hi]}(y) dy
    TriangularY,  // nu(dy) ~ 1_{[lo,hi]}(y) y dy (self-similar comparison shape)
};

struct ProbeRunOptions {
    double cap_factor = 1.5;    // absorbing top at cap_factor * theta
    double bottom_factor = 1e-3;  // window bottom = bottom_factor * eta
    int n_cells = 900;
    double dt = 0.0;            // 0: auto from the stability bound
    NuShape nu_shape = NuShape::UniformInX;
};

// First probe point with B(x) >= g(x)/x, i.e. where fragmentation outpaces
// the local exponential growth rate; t_B is the smallest t with
// flow(t, eta) >= that point (bisection).  Throws when no probe qualifies.
double fragmentation_onset_x(const Coefficients& coeffs);
double t_B(const Coefficients& coeffs, double eta);

// Evolve the Dirac cell at x0 to time t under the conservative dynamics
// (sub-window refeed off: the result must lower-bound the true kernel) and
// return the largest interval where the density clears a positive floor.
// For the mitosis kernel the candidate interval from the splitting
// construction is computed first and emptiness is reported as the expected
// failure when it is void (linear growth).
DiracFloor dirac_lower_bound(const Coefficients& coeffs,
                             const FragmentKernel& kernel, double lambda,
                             const std::function<double(double)>& phi,
                             double x0, double t, double eta, double theta,
                             const ProbeRunOptions& opt = {});

enum class SmallSetMode { Simulated, ClosedFormSelfSimilar };

struct SmallSetCertificate {
    SmallSetMode mode = SmallSetMode::Simulated;
    double t0 = 0.0;
    double eta = 0.0, theta = 0.0;  // C = [eta, theta]
    double R = 0.0;
    GridMeasure nu;                  // probability (mass 1 within 1e-10)
    LogReal alpha;
    // Closed-form mode extras: both variants of the exponent reading.
    LogReal alpha_intermediate;      // exp(-2 R^b e^{b t0}/b) variant
    std::vector<double> probe_x0;
    std::string diagnostic;
};

// Simulated certificate: `probes` log-spaced Dirac starts across [eta,theta]
// (endpoints included, runs independent and parallel), nu uniform on the
// intersected interval, alpha = min over probes and cells of mass/nu.
// Throws std::runtime_error when the intersection is empty or alpha <= 0.
SmallSetCertificate small_set_constants(const Coefficients& coeffs,
                                        const FragmentKernel& kernel,
                                        double lambda,
                                        const std::function<double(double)>& phi,
                                        double t0,
                                        const std::function<double(double)>& V_f,
                                        double R, int probes,
                                        const ProbeRunOptions& opt = {});

// Closed-form self-similar constants (g = x, B = x^b, quadratic weight):
//   nu(dy) = (2 e^{-2 t0}/R) 1_{[0, R e^{t0}]}(y) y dy   (stored normalized),
//   alpha  = t0 R^{b+3} exp(-2 (R e^{t0})^b / b).
// alpha_intermediate keeps the intermediate exponent variant for comparison.
SmallSetCertificate selfsim_small_set(double b, double t0, double R,
                                      GridPtr nu_grid);

// Endpoints of {x : V_f(x) <= R} for a decreasing-then-increasing V_f
// (bisection on each branch).
std::pair<double, double> small_set_interval(
    const std::function<double(double)>& V_f, double R, double x_lo = 1e-12,
    double x_hi = 1e12);

}  // namespace gf
