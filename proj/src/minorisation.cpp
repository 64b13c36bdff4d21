#include "gfgap/minorisation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gf {

namespace {

// Probe window shared by every Dirac run of one certificate: covers
// [bottom_factor * eta, cap_factor * X_t(theta)] so fragments can pile up
// well below the small set while the unfragmented remnant stays on-grid.
GridPtr make_probe_window(const Coefficients& coeffs,
                          const FragmentKernel& kernel, double t, double eta,
                          double theta, const ProbeRunOptions& opt) {
    double top;
    try {
        top = opt.cap_factor * flow(Flow(coeffs), t, theta);
    } catch (const std::domain_error&) {
        top = 1e3 * theta;  // characteristic blew up; cap generously
    }
    const double bottom = opt.bottom_factor * eta;
    if (kernel.kind == KernelKind::EqualMitosis) {
        const int levels = std::max(
            1, static_cast<int>(std::ceil(std::log2(top / bottom) - 1e-12)));
        const int q = std::max(4, opt.n_cells / levels);
        return make_grid_ptr(bottom, top, GridSpec::dyadic_log(q));
    }
    return make_grid_ptr(bottom, top, GridSpec::log_uniform(opt.n_cells));
}

// Conservative Dirac evolution with the sub-window refeed off, so the result
// is a strict lower bound for the true kernel.
GridMeasure evolve_dirac(const Coefficients& coeffs, const FragmentKernel& kernel,
                         double lambda, const std::function<double(double)>& phi,
                         GridPtr grid, double x0, double t,
                         const ProbeRunOptions& opt) {
    const Grid& G = *grid;
    double max_rate = 0.0;
    for (double y : G.nodes) max_rate = std::max(max_rate, coeffs.B(y) + lambda);
    double dt = opt.dt > 0.0 ? opt.dt : 0.45 / std::max(max_rate, 1e-12);
    const int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-9)));
    dt = t / steps;

    EvolutionConfig cfg;
    cfg.dt = dt;
    cfg.lambda = lambda;
    cfg.mode = EvolutionMode::Conservative;
    cfg.phi = phi;
    cfg.subgrid_refeed = false;
    const Stepper stepper(grid, coeffs, kernel, cfg);

    GridMeasure f = dirac(grid, x0);
    for (int s = 0; s < steps; ++s) stepper.step(f);
    return f;
}

double nu_shape_weight(NuShape shape, double a, double b) {
    if (b <= a) return 0.0;
    return shape == NuShape::UniformInX ? (b - a) : 0.5 * (b * b - a * a);
}

struct FloorRun {
    bool empty = true;
    double lo = 0.0, hi = 0.0, floor_ratio = 0.0;
};

// Largest contiguous cell run where the evolved density clears a relative
// threshold against the nu shape.
FloorRun density_run(const GridMeasure& f, NuShape shape) {
    const Grid& G = *f.grid;
    const int n = static_cast<int>(G.size());
    std::vector<double> r(n);
    double top = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = f.mass[i] / G.width(i);
        r[i] = shape == NuShape::UniformInX ? d : d / G.nodes[i];
        top = std::max(top, r[i]);
    }
    FloorRun run;
    if (top <= 0.0) return run;
    const double threshold = 1e-8 * top;
    int best_lo = -1, best_hi = -1, cur_lo = -1;
    for (int i = 0; i <= n; ++i) {
        const bool ok = i < n && r[i] >= threshold;
        if (ok && cur_lo < 0) cur_lo = i;
        if (!ok && cur_lo >= 0) {
            if (best_lo < 0 || i - cur_lo > best_hi - best_lo + 1) {
                best_lo = cur_lo;
                best_hi = i - 1;
            }
            cur_lo = -1;
        }
    }
    if (best_lo < 0) return run;
    run.empty = false;
    run.lo = G.edges[best_lo];
    run.hi = G.edges[best_hi + 1];
    run.floor_ratio = *std::min_element(r.begin() + best_lo, r.begin() + best_hi + 1);
    return run;
}

}  // namespace

// ===========================================================================
// Fragmentation onset and the time to reach it
// ===========================================================================

double fragmentation_onset_x(const Coefficients& coeffs) {
    const int n = 4096;
    const double lo = 1e-6, hi = 1e6;
    for (int i = 0; i < n; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        if (coeffs.B(x) >= coeffs.g(x) / x) return x;
    }
    throw std::runtime_error(
        "fragmentation never outpaces the local growth rate inside the probe "
        "window");
}

double t_B(const Coefficients& coeffs, double eta) {
    const double x_B = fragmentation_onset_x(coeffs);
    if (eta >= x_B) return 0.0;
    const Flow f(coeffs);
    if (eta <= 0.0) {
        const double H0 = f.H0();
        if (!std::isfinite(H0)) return std::numeric_limits<double>::infinity();
        return f.H(x_B) - H0;
    }
    return f.H(x_B) - f.H(eta);
}

// ===========================================================================
// Single-Dirac floor
// ===========================================================================

DiracFloor dirac_lower_bound(const Coefficients& coeffs,
                             const FragmentKernel& kernel, double lambda,
                             const std::function<double(double)>& phi, double x0,
                             double t, double eta, double theta,
                             const ProbeRunOptions& opt) {
    DiracFloor out;
    std::ostringstream diag;

    if (kernel.kind == KernelKind::EqualMitosis) {
        // One-split reachability interval, worst case over starting points:
        // lowest upper end comes from a start at the origin with the first
        // useful split at t_B, highest lower end from a start at theta that
        // splits at the last moment.
        const Flow f(coeffs);
        const double tb = t_B(coeffs, 0.0);
        out.candidate_lo = 0.5 * f.value(t, theta);
        bool monotone_ok = true;
        if (std::isfinite(tb) && t >= tb) {
            out.candidate_hi = f.value(t - tb, 0.5 * f.value(tb, 0.0));
            // Half-then-grow must not overtake grow-then-half
            // (fails for superlinear growth; equality for g = x).
            const double half_grown = f.value(t, 0.5 * theta);
            monotone_ok = 0.5 * f.value(t, theta) <= half_grown * (1.0 + 1e-9);
        } else {
            out.candidate_hi = 0.0;
            diag << "first split time unreachable from the origin within t; ";
        }
        if (!monotone_ok) {
            out.candidate_hi = 0.0;
            diag << "half-then-grow overtakes grow-then-half; ";
        }
        if (out.candidate_lo >= out.candidate_hi) {
            out.empty = true;
            diag << "splitting interval empty at t=" << t
                 << " (expected when growth is at least linear)";
            out.diagnostic = diag.str();
            return out;
        }
    }

    GridPtr window = make_probe_window(coeffs, kernel, t, eta, theta, opt);
    const GridMeasure f =
        evolve_dirac(coeffs, kernel, lambda, phi, window, x0, t, opt);
    FloorRun run = density_run(f, opt.nu_shape);
    if (run.empty) {
        out.empty = true;
        diag << "all mass escaped the probe window";
        out.diagnostic = diag.str();
        return out;
    }
    double lo = run.lo, hi = run.hi;
    if (kernel.kind == KernelKind::EqualMitosis) {
        lo = std::max(lo, out.candidate_lo);
        hi = std::min(hi, out.candidate_hi);
        if (lo >= hi) {
            out.empty = true;
            diag << "density run misses the splitting interval";
            out.diagnostic = diag.str();
            return out;
        }
    } else {
        out.candidate_lo = lo;
        out.candidate_hi = hi;
    }

    // Floor against the nu shape normalized on [lo, hi].
    const Grid& G = *window;
    const int n_cells = static_cast<int>(G.size());
    double Z = nu_shape_weight(opt.nu_shape, lo, hi);
    double floor = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_cells; ++i) {
        const double a = std::max(G.edges[i], lo), b = std::min(G.edges[i + 1], hi);
        const double nu_i = nu_shape_weight(opt.nu_shape, a, b) / Z;
        if (nu_i <= 0.0) continue;
        floor = std::min(floor, f.mass[i] / nu_i);
    }
    out.empty = false;
    out.lo = lo;
    out.hi = hi;
    out.floor = floor;
    diag << "floor " << floor << " on [" << lo << ", " << hi << "]";
    out.diagnostic = diag.str();
    return out;
}

// ===========================================================================
// Small-set certificates
// ===========================================================================

SmallSetCertificate small_set_constants(const Coefficients& coeffs,
                                        const FragmentKernel& kernel,
                                        double lambda,
                                        const std::function<double(double)>& phi,
                                        double t0,
                                        const std::function<double(double)>& V_f,
                                        double R, int probes,
                                        const ProbeRunOptions& opt) {
    if (probes < 2)
        throw std::invalid_argument("small-set certificate needs >= 2 probes");
    const auto [eta, theta] = small_set_interval(V_f, R);

    SmallSetCertificate cert;
    cert.mode = SmallSetMode::Simulated;
    cert.t0 = t0;
    cert.eta = eta;
    cert.theta = theta;
    cert.R = R;

    if (kernel.kind == KernelKind::EqualMitosis) {
        // The one-split reachability interval must be non-empty before any
        // simulation is worth running.
        DiracFloor probe0 = dirac_lower_bound(coeffs, kernel, lambda, phi, theta,
                                              t0, eta, theta, opt);
        if (probe0.empty)
            throw std::runtime_error(
                "no small set at this step time: " + probe0.diagnostic);
    }

    GridPtr window = make_probe_window(coeffs, kernel, t0, eta, theta, opt);
    const Grid& G = *window;
    const int n = static_cast<int>(G.size());

    cert.probe_x0.resize(probes);
    for (int p = 0; p < probes; ++p)
        cert.probe_x0[p] =
            eta * std::pow(theta / eta, static_cast<double>(p) / (probes - 1));

    std::vector<GridMeasure> evolved(probes);
    std::vector<FloorRun> runs(probes);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < probes; ++p) {
        evolved[p] = evolve_dirac(coeffs, kernel, lambda, phi, window,
                                  cert.probe_x0[p], t0, opt);
        runs[p] = density_run(evolved[p], opt.nu_shape);
    }

    double LO = 0.0, HI = std::numeric_limits<double>::infinity();
    for (int p = 0; p < probes; ++p) {
        if (runs[p].empty)
            throw std::runtime_error(
                "a Dirac probe lost its entire window mass; no small set at "
                "this resolution");
        LO = std::max(LO, runs[p].lo);
        HI = std::min(HI, runs[p].hi);
    }
    if (kernel.kind == KernelKind::EqualMitosis) {
        const Flow f(coeffs);
        const double tb = t_B(coeffs, 0.0);
        LO = std::max(LO, 0.5 * f.value(t0, theta));
        HI = std::min(HI, std::isfinite(tb) && t0 >= tb
                              ? f.value(t0 - tb, 0.5 * f.value(tb, 0.0))
                              : 0.0);
    }
    if (LO >= HI)
        throw std::runtime_error(
            "the Dirac floor intervals have empty intersection; no small set "
            "at this step time");

    // nu on the intersection, cell masses on the shared window grid.
    cert.nu.grid = window;
    cert.nu.mass.assign(n, 0.0);
    const double Z = nu_shape_weight(opt.nu_shape, LO, HI);
    for (int i = 0; i < n; ++i) {
        const double a = std::max(G.edges[i], LO), b = std::min(G.edges[i + 1], HI);
        cert.nu.mass[i] = nu_shape_weight(opt.nu_shape, a, b) / Z;
    }

    double alpha = std::numeric_limits<double>::infinity();
    for (int p = 0; p < probes; ++p)
        for (int i = 0; i < n; ++i) {
            if (cert.nu.mass[i] <= 0.0) continue;
            alpha = std::min(alpha, evolved[p].mass[i] / cert.nu.mass[i]);
        }
    if (!(alpha > 0.0))
        throw std::runtime_error(
            "the minorisation constant collapsed to zero on the intersection");
    cert.alpha = LogReal::from_double(alpha);

    std::ostringstream diag;
    diag << "simulated over " << probes << " Dirac starts in [" << eta << ", "
         << theta << "], nu on [" << LO << ", " << HI << "], alpha = " << alpha;
    cert.diagnostic = diag.str();
    return cert;
}

SmallSetCertificate selfsim_small_set(double b, double t0, double R,
                                      GridPtr nu_grid) {
    if (b <= 0.0 || t0 <= 0.0 || R <= 0.0)
        throw std::invalid_argument("closed-form small set needs b, t0, R > 0");
    SmallSetCertificate cert;
    cert.mode = SmallSetMode::ClosedFormSelfSimilar;
    cert.t0 = t0;
    cert.R = R;
    // {x : (1 + x^2)/x <= R}: exact roots of x^2 - R x + 1 = 0.
    const double disc = std::sqrt(std::max(R * R - 4.0, 0.0));
    cert.theta = 0.5 * (R + disc);
    cert.eta = 0.5 * (R - disc);

    const double T = R * std::exp(t0);  // nu support [0, T], density ~ y
    const Grid& G = *nu_grid;
    const int n = static_cast<int>(G.size());
    cert.nu.grid = nu_grid;
    cert.nu.mass.assign(G.size(), 0.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = std::min(G.edges[i], T), c = std::min(G.edges[i + 1], T);
        cert.nu.mass[i] = std::max(0.0, 0.5 * (c * c - a * a));
        total += cert.nu.mass[i];
    }
    if (total <= 0.0)
        throw std::invalid_argument("nu grid misses the support [0, R e^{t0}]");
    for (double& m : cert.nu.mass) m /= total;

    // log alpha = log t0 + (b+3) log R - 2 (R e^{t0})^b / b; the exponential
    // factor alone is kept as the intermediate reading.
    const double tail = -2.0 * std::pow(R * std::exp(t0), b) / b;
    cert.alpha = LogReal::from_log(std::log(t0) + (b + 3.0) * std::log(R) + tail);
    cert.alpha_intermediate = LogReal::from_log(tail);

    std::ostringstream diag;
    diag << "closed form: nu ~ y dy on [0, " << T << "], log alpha = "
         << cert.alpha.log_value();
    cert.diagnostic = diag.str();
    return cert;
}

std::pair<double, double> small_set_interval(
    const std::function<double(double)>& V_f, double R, double x_lo,
    double x_hi) {
    // V_f decreases then increases; locate the minimum by ternary search on
    // the log axis, then bisect each branch for the level-R crossing.
    double lo = std::log(x_lo), hi = std::log(x_hi);
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (V_f(std::exp(m1)) <= V_f(std::exp(m2))) hi = m2; else lo = m1;
    }
    const double x_star = std::exp(0.5 * (lo + hi));
    if (V_f(x_star) > R)
        throw std::runtime_error(
            "the weight never dips below the small-set level R");

    auto crossing = [&](double a, double b, bool decreasing) {
        // V_f(exp(a)) and V_f(exp(b)) straddle R.
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            const bool above = V_f(std::exp(m)) > R;
            if (decreasing == above) a = m; else b = m;
        }
        return std::exp(0.5 * (a + b));
    };

    double eta = x_lo, theta = x_hi;
    if (V_f(x_lo) > R) eta = crossing(std::log(x_lo), std::log(x_star), true);
    if (V_f(x_hi) > R) theta = crossing(std::log(x_star), std::log(x_hi), false);
    return {eta, theta};
}

}  // namespace gf
