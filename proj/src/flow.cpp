#include "gfgap/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// int_{x_ref}^{x} du / (g_ref (u/x_ref)^p): the closed form every segment
// (and every pure power law) reduces to.
double power_segment_time(double x_ref, double g_ref, double p, double x) {
    if (p == 1.0) return (x_ref / g_ref) * std::log(x / x_ref);
    const double r = std::pow(x / x_ref, 1.0 - p);
    return (x_ref / g_ref) * (r - 1.0) / (1.0 - p);
}

// Inverse of the above in x; returns 0 exactly at the escape time, throws
// below it.  tau is measured from x_ref.
double power_segment_invert(double x_ref, double g_ref, double p, double tau) {
    if (p == 1.0) return x_ref * std::exp(g_ref * tau / x_ref);
    const double base = 1.0 + (1.0 - p) * g_ref * tau / x_ref;
    if (base < 0.0)
        throw std::domain_error("characteristic leaves (0, inf) within the step");
    if (base == 0.0) return 0.0;
    return x_ref * std::pow(base, 1.0 / (1.0 - p));
}
}  // namespace

Flow::Flow(const Coefficients& coeffs) : coeffs_(coeffs) {
    if (coeffs_.is_power_law()) {
        const auto& pl = coeffs_.as_power_law();
        if (pl.g0 == 0.0)
            throw std::domain_error("flow undefined without transport (g = 0)");
        H0_ = pl.a < 1.0 ? -1.0 / (pl.g0 * (1.0 - pl.a)) : -kInf;
        return;
    }
    // Tabulated g: accumulate per-segment closed forms across the knots,
    // then shift so H(1) = 0.
    const auto& lx = coeffs_.g_curve().log_x();
    const auto& ly = coeffs_.g_curve().log_y();
    const std::size_t m = lx.size();
    knot_x_.resize(m);
    knot_H_.resize(m);
    for (std::size_t i = 0; i < m; ++i) knot_x_[i] = std::exp(lx[i]);
    knot_H_[0] = 0.0;
    for (std::size_t s = 0; s + 1 < m; ++s)
        knot_H_[s + 1] = knot_H_[s] + segment_H(s, knot_x_[s + 1]);
    const double offset = H(1.0);  // raw accumulation, knot_H_[0] still 0
    for (double& h : knot_H_) h -= offset;
    const double p0 = (ly[1] - ly[0]) / (lx[1] - lx[0]);
    if (p0 < 1.0) {
        const double g0v = std::exp(ly[0]);
        H0_ = knot_H_[0] - (knot_x_[0] / g0v) / (1.0 - p0);
    } else {
        H0_ = -kInf;
    }
}

double Flow::segment_H(std::size_t seg, double x) const {
    const auto& lx = coeffs_.g_curve().log_x();
    const auto& ly = coeffs_.g_curve().log_y();
    const double p = (ly[seg + 1] - ly[seg]) / (lx[seg + 1] - lx[seg]);
    return power_segment_time(knot_x_[seg], std::exp(ly[seg]), p, x);
}

double Flow::H_power(double x) const {
    const auto& pl = coeffs_.as_power_law();
    return power_segment_time(1.0, pl.g0, pl.a, x);
}

double Flow::H_inv_power(double t) const {
    const auto& pl = coeffs_.as_power_law();
    return power_segment_invert(1.0, pl.g0, pl.a, t);
}

double Flow::H(double x) const {
    if (x <= 0.0) throw std::domain_error("H requires x > 0");
    if (coeffs_.is_power_law()) return H_power(x);
    // Bracketing knot segment; the end segments extend as power laws.
    std::size_t s;
    if (x <= knot_x_.front()) {
        s = 0;
    } else if (x >= knot_x_.back()) {
        s = knot_x_.size() - 2;
    } else {
        auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
        s = static_cast<std::size_t>(it - knot_x_.begin()) - 1;
    }
    return knot_H_[s] + segment_H(s, x);
}

double Flow::H_inverse(double t) const {
    if (coeffs_.is_power_law()) return H_inv_power(t);
    std::size_t s;
    if (t <= knot_H_.front()) {
        s = 0;
    } else if (t >= knot_H_.back()) {
        s = knot_H_.size() - 2;
    } else {
        auto it = std::upper_bound(knot_H_.begin(), knot_H_.end(), t);
        s = static_cast<std::size_t>(it - knot_H_.begin()) - 1;
    }
    const auto& lx = coeffs_.g_curve().log_x();
    const auto& ly = coeffs_.g_curve().log_y();
    const double p = (ly[s + 1] - ly[s]) / (lx[s + 1] - lx[s]);
    return power_segment_invert(knot_x_[s], std::exp(ly[s]), p, t - knot_H_[s]);
}

double Flow::value(double t, double x0) const {
    if (x0 < 0.0) throw std::domain_error("flow requires x0 >= 0");
    if (x0 == 0.0) {
        if (t <= 0.0 || H0_ == -kInf) return 0.0;
        return H_inverse(t + H0_);
    }
    const double tau = t + H(x0);
    if (tau <= H0_) {
        if (tau == H0_) return 0.0;
        throw std::domain_error("characteristic leaves (0, inf) within the step");
    }
    return H_inverse(tau);
}

double Flow::jacobian_weight(double t, double x) const {
    if (x <= 0.0) throw std::domain_error("jacobian weight requires x > 0");
    // exp(-int_0^t g'(X_{-tau}(x)) dtau) with u = X_{-tau}(x) substituted
    // becomes exp(-int_{X_{-t}(x)}^{x} g'(u)/g(u) du) = g(X_{-t}(x)) / g(x),
    // exact for any coefficient family.
    const double y = value(-t, x);
    if (y <= 0.0)
        throw std::domain_error("backward characteristic reaches zero");
    return coeffs_.g(y) / coeffs_.g(x);
}

}  // namespace gf
