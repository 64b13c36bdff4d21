#include "gfgap/ratemeter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gf {

namespace {

// Ordinary least squares for log d ~ intercept - rho * t on the window
// indices; returns false when the system is degenerate.
bool fit_line(const std::vector<double>& t, const std::vector<double>& y,
              double& slope, double& intercept, double& r_squared) {
    const int m = static_cast<int>(t.size());
    if (m < 2) return false;
    double st = 0.0, sy = 0.0;
    for (int i = 0; i < m; ++i) {
        st += t[i];
        sy += y[i];
    }
    const double tb = st / m, yb = sy / m;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (int i = 0; i < m; ++i) {
        stt += (t[i] - tb) * (t[i] - tb);
        sty += (t[i] - tb) * (y[i] - yb);
        syy += (y[i] - yb) * (y[i] - yb);
    }
    if (stt <= 0.0) return false;
    slope = sty / stt;
    intercept = yb - slope * tb;
    if (syy <= 0.0) {
        r_squared = 0.0;  // constant series: nothing to explain
        return true;
    }
    double ss_res = 0.0;
    for (int i = 0; i < m; ++i) {
        const double e = y[i] - (intercept + slope * t[i]);
        ss_res += e * e;
    }
    r_squared = 1.0 - ss_res / syy;
    return true;
}

// Coherent-residual detector: a single DFT bin carrying >= 4x the mean power
// of the others marks a periodic residual (peripheral spectrum), as opposed
// to broadband fit noise.
bool dominant_tone(const std::vector<double>& resid, double span,
                   double& period) {
    const int m = static_cast<int>(resid.size());
    if (m < 8) return false;
    const int kmax = m / 2;
    std::vector<double> power(kmax + 1, 0.0);
    for (int k = 1; k <= kmax; ++k) {
        double re = 0.0, im = 0.0;
        for (int i = 0; i < m; ++i) {
            const double ang = 2.0 * M_PI * k * i / m;
            re += resid[i] * std::cos(ang);
            im -= resid[i] * std::sin(ang);
        }
        power[k] = re * re + im * im;
    }
    int k_peak = 1;
    for (int k = 2; k <= kmax; ++k)
        if (power[k] > power[k_peak]) k_peak = k;
    double rest = 0.0;
    int n_rest = 0;
    for (int k = 1; k <= kmax; ++k)
        if (k != k_peak) {
            rest += power[k];
            ++n_rest;
        }
    if (n_rest == 0) return false;
    const double mean_rest = rest / n_rest;
    if (power[k_peak] < 4.0 * mean_rest) return false;
    period = span / k_peak;
    return true;
}

}  // namespace

// ===========================================================================
// Empirical decay-rate measurement
// ===========================================================================

RateFit measure_rate(const Coefficients& coeffs, const FragmentKernel& kernel,
                     const EigenTriple& triple, const GridMeasure& n0,
                     double T, const WeightSpec& V, const RateOptions& opt) {
    if (!n0.grid || !triple.N.grid)
        throw std::invalid_argument("measure_rate: states need grids");
    const Grid& G = *n0.grid;
    const Grid& GN = *triple.N.grid;
    if (G.size() != GN.size() || G.x_min != GN.x_min || G.x_max != GN.x_max)
        throw std::invalid_argument(
            "measure_rate: the reference eigenstate and the initial state "
            "must share a grid");
    if (!(T > 0.0)) throw std::invalid_argument("measure_rate: T must be positive");
    if (opt.snapshots < 2)
        throw std::invalid_argument("measure_rate: need at least 2 snapshots");

    RateFit fit;
    const int n = static_cast<int>(G.size());

    // Step size: broad snapshot spacing, refined to meet the loss-term
    // stability bound.
    double max_rate = 0.0;
    for (double y : G.nodes)
        max_rate = std::max(max_rate, coeffs.B(y) + triple.lambda);
    double dt = opt.dt > 0.0 ? opt.dt : 0.45 / std::max(max_rate, 1e-12);
    const double interval = T / opt.snapshots;
    const int steps_per_snap =
        std::max(1, static_cast<int>(std::ceil(interval / dt - 1e-9)));
    dt = interval / steps_per_snap;

    EvolutionConfig cfg;
    cfg.dt = dt;
    cfg.lambda = triple.lambda;
    cfg.mode = EvolutionMode::Scaled;
    cfg.splitting = opt.splitting;
    const Stepper stepper(n0.grid, coeffs, kernel, cfg);

    // Target: <phi, n0> N with the discrete pairing on the shared grid.
    double pairing = 0.0;
    for (int i = 0; i < n; ++i) pairing += triple.phi[i] * n0.mass[i];
    GridMeasure target = triple.N;
    for (double& m : target.mass) m *= pairing;

    {
        int peak = 0;
        for (int i = 1; i < n; ++i)
            if (n0.mass[i] > n0.mass[peak]) peak = i;
        std::ostringstream d;
        d << "peak mass at x = " << G.nodes[peak] << " (cell " << peak << ")";
        fit.initial_descriptor = d.str();
    }

    GridMeasure m = n0;
    fit.times.push_back(0.0);
    fit.distances.push_back(weighted_tv_distance(m, target, V));
    for (int s = 1; s <= opt.snapshots; ++s) {
        for (int q = 0; q < steps_per_snap; ++q) stepper.step(m);
        fit.times.push_back(s * interval);
        fit.distances.push_back(weighted_tv_distance(m, target, V));
    }

    // Fit window [T/3, T], dropping samples at the roundoff floor.
    fit.window_lo = T / 3.0;
    fit.window_hi = T;
    std::vector<double> tw, yw;
    int floored = 0;
    for (std::size_t i = 0; i < fit.times.size(); ++i) {
        if (fit.times[i] < fit.window_lo - 1e-12) continue;
        if (fit.distances[i] <= opt.floor) {
            ++floored;
            continue;
        }
        tw.push_back(fit.times[i]);
        yw.push_back(std::log(fit.distances[i]));
    }
    fit.n_snapshots = static_cast<int>(tw.size());

    std::ostringstream diag;
    if (fit.n_snapshots < 10) {
        diag << "only " << fit.n_snapshots << " usable snapshots in the window";
        if (floored > 0)
            diag << " (" << floored
                 << " at the roundoff floor; the state may already be "
                    "stationary)";
        fit.diagnostic = diag.str();
        return fit;
    }

    double slope = 0.0;
    if (!fit_line(tw, yw, slope, fit.intercept, fit.r_squared)) {
        fit.diagnostic = "degenerate fit window";
        return fit;
    }
    fit.rho_emp = -slope;

    std::vector<double> resid(tw.size());
    double rmin = 0.0, rmax = 0.0;
    for (std::size_t i = 0; i < tw.size(); ++i) {
        resid[i] = yw[i] - (fit.intercept + slope * tw[i]);
        rmin = std::min(rmin, resid[i]);
        rmax = std::max(rmax, resid[i]);
    }
    fit.residual_amplitude = 0.5 * (rmax - rmin);
    if (fit.residual_amplitude > 0.1) {
        const double span = tw.back() - tw.front();
        fit.oscillation_detected =
            dominant_tone(resid, span, fit.oscillation_period);
    }

    if (fit.oscillation_detected) {
        diag << "coherent residual oscillation, period ~ "
             << fit.oscillation_period << " (relative amplitude "
             << fit.residual_amplitude
             << "): distances do not decay at a single rate";
    } else if (fit.r_squared < 0.98) {
        diag << "fit quality r^2 = " << fit.r_squared << " below 0.98";
    } else if (!(fit.rho_emp > 0.0)) {
        diag << "no decay: fitted rate " << fit.rho_emp;
    } else {
        fit.accepted = true;
        diag << "rho_emp = " << fit.rho_emp << " over " << fit.n_snapshots
             << " snapshots, r^2 = " << fit.r_squared;
    }
    fit.diagnostic = diag.str();
    return fit;
}

// ===========================================================================
// Certificate comparison (log domain)
// ===========================================================================

RateComparison rate_vs_certificate(const RateFit& fit, LogReal rho_cert) {
    RateComparison cmp;
    cmp.fit = fit;
    cmp.rho_cert = rho_cert;
    std::ostringstream diag;
    if (!fit.accepted) {
        cmp.rate_confirmed = false;
        cmp.log_gap = 0.0;
        diag << "no accepted empirical rate: " << fit.diagnostic;
    } else if (!rho_cert.positive()) {
        cmp.rate_confirmed = false;
        cmp.log_gap = 0.0;
        diag << "certificate rate is not positive";
    } else {
        const LogReal emp = LogReal::from_double(fit.rho_emp);
        cmp.rate_confirmed = emp >= rho_cert;
        cmp.log_gap = emp.log_value() - rho_cert.log_value();
        diag << "log rho_emp = " << emp.log_value() << ", log rho_cert = "
             << rho_cert.log_value() << ", gap = " << cmp.log_gap
             << (cmp.rate_confirmed ? " (certificate dominated)"
                                    : " (OBSERVED RATE BELOW CERTIFICATE)");
    }
    cmp.diagnostic = diag.str();
    return cmp;
}

}  // namespace gf
