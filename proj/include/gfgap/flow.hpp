#pragma once

#include <memory>
#include <vector>

#include "gfgap/model.hpp"

namespace gf {

// ---------------------------------------------------------------------------
// Characteristic machinery for the transport part x' = g(x):
//   H(x)   = int_1^x du/g(u)       (strictly increasing, H(1) = 0)
//   X_t(x) = H^{-1}(t + H(x))      (both time directions)
//   d/dx X_{-t}(x)                 (Jacobian weight of the backward flow)
//
// Power-law g has closed forms.  A tabulated g is a chain of power-law
// segments (log-log piecewise linear), so H accumulates the per-segment
// closed-form integrals and H^{-1} inverts within the bracketing segment
// (monotone bisection+secant, 60-iteration cap).
// ---------------------------------------------------------------------------

class Flow {
public:
    explicit Flow(const Coefficients& coeffs);

    double H(double x) const;          // throws std::domain_error for x <= 0
    double H_inverse(double t) const;  // t > H0 required

    // H(0+): finite when int_0^1 1/g converges, else -inf.
    double H0() const { return H0_; }

    // X_t(x0); t may be negative.  X_t(0) = 0 when H0 = -inf, otherwise
    // H^{-1}(t + H0).  Throws std::domain_error when the backward flow
    // leaves (0, inf) within |t|.
    double value(double t, double x0) const;

    // d/dx X_{-t}(x) for t >= 0.  The defining integral
    // exp(-int_0^t g'(X_{-tau}(x)) dtau) telescopes exactly to
    // g(X_{-t}(x))/g(x) (substitute u = X_{-tau}(x)), which is how it is
    // evaluated for every coefficient family.  Requires x > X_t(0).
    double jacobian_weight(double t, double x) const;

    const Coefficients& coeffs() const { return coeffs_; }

private:
    Coefficients coeffs_;
    double H0_ = 0.0;

    // Tabulated case: knots (in x) with accumulated H values.
    std::vector<double> knot_x_;
    std::vector<double> knot_H_;

    double H_power(double x) const;
    double H_inv_power(double t) const;
    double segment_H(std::size_t seg, double x) const;
};

// Convenience wrappers mirroring the operation names used throughout.
inline double flow(const Flow& f, double t, double x0) { return f.value(t, x0); }
inline double jacobian_weight(const Flow& f, double t, double x) {
    return f.jacobian_weight(t, x);
}

}  // namespace gf
