#include "gfgap/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace gf {

namespace {

// ===========================================================================
// Dense LU with partial pivoting (the truncated dual operator is small and
// dense along its gain rows; a handful of factorizations per solve).
// ===========================================================================

class DenseLU {
public:
    bool factor(std::vector<double> m, int n) {
        n_ = n;
        a_ = std::move(m);
        piv_.resize(n);
        for (int col = 0; col < n; ++col) {
            int p = col;
            double best = std::fabs(a_[col * n + col]);
            for (int r = col + 1; r < n; ++r) {
                const double v = std::fabs(a_[r * n + col]);
                if (v > best) { best = v; p = r; }
            }
            if (!(best > 1e-300)) return false;
            piv_[col] = p;
            if (p != col)
                for (int j = 0; j < n; ++j)
                    std::swap(a_[col * n + j], a_[p * n + j]);
            const double inv = 1.0 / a_[col * n + col];
            for (int r = col + 1; r < n; ++r) {
                const double f = a_[r * n + col] * inv;
                a_[r * n + col] = f;
                if (f != 0.0)
                    for (int j = col + 1; j < n; ++j)
                        a_[r * n + j] -= f * a_[col * n + j];
            }
        }
        return true;
    }

    void solve(std::vector<double>& x) const {
        const int n = n_;
        for (int i = 0; i < n; ++i) {
            if (piv_[i] != i) std::swap(x[i], x[piv_[i]]);
            for (int j = 0; j < i; ++j) x[i] -= a_[i * n + j] * x[j];
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= a_[i * n + j] * x[j];
            x[i] /= a_[i * n + i];
        }
    }

private:
    int n_ = 0;
    std::vector<double> a_;
    std::vector<int> piv_;
};

// ===========================================================================
// Discrete dual generator.  Row i of A realizes
//   (L* phi)_i = g_i phi'(y_i) - B_i phi_i + B_i int_0^1 phi(z y_i) p(dz)
// with the derivative upwinded from the right (dual transport carries
// information leftward) and phi(R) = 0 closing the last row.  The gain
// quadrature is midpoint-per-cell plus an interpolated partial cell, which
// reproduces phi(x) = x exactly; the sub-window strip models phi as linear
// through the origin when int_0^1 1/g diverges and as a constant otherwise.
// ===========================================================================

std::vector<double> build_dual_matrix(const Grid& G, const Coefficients& coeffs,
                                      const FragmentKernel& kernel) {
    const int n = G.size();
    std::vector<double> A(static_cast<std::size_t>(n) * n, 0.0);
    const bool phi0_positive = coeffs.growth_exponent_at_zero() < 1.0;
    const bool mitosis = kernel.kind == KernelKind::EqualMitosis;
    if (!mitosis && kernel.kind != KernelKind::Uniform)
        throw std::invalid_argument(
            "custom fragment densities support moment checks, not eigensolves");
    const int q = mitosis ? G.cells_per_octave : 0;
    if (mitosis && G.scheme != GridScheme::DyadicLog)
        throw std::invalid_argument(
            "equal mitosis needs a dyadic-log grid so x/2 is an exact cell shift");

    for (int i = 0; i < n; ++i) {
        double* row = &A[static_cast<std::size_t>(i) * n];
        const double y = G.nodes[i];
        const double g = coeffs.g(y);
        const double B = coeffs.B(y);

        if (i + 1 < n) {
            const double d = G.nodes[i + 1] - y;
            row[i] -= g / d;
            row[i + 1] += g / d;
        } else {
            row[i] -= g / (G.edges[n] - y);  // phi(R) = 0
        }
        row[i] -= B;

        if (mitosis) {
            if (i >= q) {
                row[i - q] += 2.0 * B;
            } else if (phi0_positive) {
                row[0] += 2.0 * B;
            } else {
                row[0] += 2.0 * B * (0.5 * y) / G.nodes[0];
            }
            continue;
        }

        // Uniform daughters: (2 B_i / y_i) int_0^{y_i} phi(u) du.
        const double f = 2.0 * B / y;
        if (phi0_positive) {
            row[0] += f * G.x_min;
        } else {
            row[0] += f * G.x_min * G.x_min / (2.0 * G.nodes[0]);
        }
        for (int j = 0; j < i; ++j) row[j] += f * G.width(j);
        const double delta = y - G.edges[i];
        if (i == 0) {
            if (phi0_positive) {
                row[0] += f * delta;
            } else {
                row[0] += f * delta * 0.5 * (1.0 + G.edges[0] / y);
            }
        } else {
            const double theta =
                (G.edges[i] - G.nodes[i - 1]) / (y - G.nodes[i - 1]);
            row[i - 1] += f * 0.5 * delta * (1.0 - theta);
            row[i] += f * 0.5 * delta * (1.0 + theta);
        }
    }
    return A;
}

// ===========================================================================
// Perron pair by shifted inverse power iteration.  The matrix is Metzler and
// irreducible, so for any shift mu above the spectral abscissa (mu I - A) is
// a nonsingular M-matrix: iterates stay strictly positive and converge to
// the Perron vector.  The shift starts above the Gershgorin row-sum bound
// and walks down toward the estimate, refactoring a handful of times.
// ===========================================================================

struct PerronPair {
    double lambda = 0.0;
    std::vector<double> v;
    bool ok = false;
};

PerronPair perron_pair(const std::vector<double>& A, int n,
                       const DualSolveOptions& opt) {
    double mu = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += A[static_cast<std::size_t>(i) * n + j];
        mu = std::max(mu, row);
    }
    mu += 1.0;

    std::vector<double> v(n, 1.0);
    double lam = mu - 1.0;
    DenseLU lu;
    for (int outer = 0; outer < 60; ++outer) {
        std::vector<double> shifted(A.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i) * n + j;
                shifted[idx] = (i == j ? mu : 0.0) - A[idx];
            }
        if (!lu.factor(std::move(shifted), n)) {
            mu = mu * 1.5 + 1.0;  // essentially singular: back off upward
            continue;
        }

        bool bad = false, settled = false;
        for (int it = 0; it < opt.max_iterations; ++it) {
            std::vector<double> w = v;
            lu.solve(w);
            double sup = 0.0;
            for (double x : w) {
                if (!std::isfinite(x) || x <= 0.0) { bad = true; break; }
                sup = std::max(sup, x);
            }
            if (bad || sup <= 0.0) { bad = true; break; }
            lam = mu - 1.0 / sup;
            double delta = 0.0;
            for (int i = 0; i < n; ++i) {
                const double nv = w[i] / sup;
                delta = std::max(delta, std::fabs(nv - v[i]));
                v[i] = nv;
            }
            if (delta < 1e-14) { settled = true; break; }
        }
        if (bad) {
            mu = mu * 4.0 + 1e-6;  // the shift dove below the Perron root
            continue;
        }
        const double target = lam + opt.shift_pad * std::fabs(lam) + 1e-6;
        if (settled && mu <= target * (1.0 + 1e-9) + 1e-5)
            return {lam, std::move(v), true};
        mu = std::max(target, mu / 256.0);
    }
    return {lam, std::move(v), false};
}

// Log-log interpolation over positive samples with end-segment slope
// extrapolation on both sides.
double interp_loglog(const std::vector<double>& xs, const std::vector<double>& ys,
                     double x) {
    const std::size_t n = xs.size();
    if (x <= 0.0) throw std::domain_error("interp_loglog: x must be positive");
    const double lx = std::log(x);
    std::size_t hi;
    if (x <= xs.front()) {
        hi = 1;
    } else if (x >= xs.back()) {
        hi = n - 1;
    } else {
        hi = static_cast<std::size_t>(
            std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    }
    const double x0 = std::log(xs[hi - 1]), x1 = std::log(xs[hi]);
    const double y0 = std::log(ys[hi - 1]), y1 = std::log(ys[hi]);
    const double t = (lx - x0) / (x1 - x0);
    return std::exp(y0 + t * (y1 - y0));
}

// 8-point Gauss-Legendre on [-1, 1] for per-cell integrals of smooth
// closed-form densities.
constexpr double kG8Node[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kG8Weight[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

}  // namespace

// ===========================================================================
// crossover_A
// ===========================================================================

double crossover_A(const Coefficients& coeffs, const FragmentKernel& kernel,
                   double k) {
    const double p_k = moment(kernel, k);
    const int n = 2048;
    const double lo = 1e-4, hi = 1e4;
    std::vector<double> xs(n), rho(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        const double x = lo * std::pow(hi / lo, t);
        xs[i] = x;
        rho[i] = std::pow(x, k - 1.0) *
                 (-k * coeffs.g(x) - coeffs.B(x) * std::pow(x, 1.0 - k) +
                  (1.0 - p_k) * coeffs.B(x) * x);
    }
    int first = n;  // first index of the all-positive tail
    for (int i = n - 1; i >= 0; --i) {
        if (rho[i] > 0.0) first = i; else break;
    }
    if (first == n)
        throw std::runtime_error(
            "dual weight never starts drifting downward inside the probe "
            "window; the coefficient balance looks violated");
    return xs[first];
}

// ===========================================================================
// solve_truncated_dual
// ===========================================================================

TruncatedDualSolution solve_truncated_dual(const Coefficients& coeffs,
                                           const FragmentKernel& kernel,
                                           double R, double k,
                                           const DualSolveOptions& opt) {
    if (R <= 0.0) throw std::invalid_argument("truncated solve: R must be positive");
    GridPtr grid;
    if (kernel.kind == KernelKind::EqualMitosis) {
        const int levels = std::max(
            1, static_cast<int>(std::ceil(std::log2(1.0 / opt.x_min_factor))));
        const int q = std::max(4, opt.n_cells / levels);
        grid = make_grid_ptr(R * std::exp2(static_cast<double>(-levels)), R,
                             GridSpec::dyadic_log(q));
    } else {
        grid = make_grid_ptr(opt.x_min_factor * R, R,
                             GridSpec::log_uniform(opt.n_cells));
    }
    const Grid& G = *grid;
    const int n = G.size();

    const double A_cross = crossover_A(coeffs, kernel, k);
    if (A_cross >= R)
        throw std::invalid_argument(
            "truncation window ends before the weight crossover; enlarge R");

    const std::vector<double> A = build_dual_matrix(G, coeffs, kernel);
    PerronPair pp = perron_pair(A, n, opt);
    if (!pp.ok)
        throw std::runtime_error(
            "dual inverse iteration did not settle; R too small or grid too "
            "coarse");
    double sup_all = 0.0, min_all = 0.0;
    for (double x : pp.v) {
        sup_all = std::max(sup_all, x);
        min_all = std::min(min_all, x);
    }
    if (min_all < -1e-10 * sup_all)
        throw std::runtime_error(
            "Perron vector came back with a negative component; the "
            "discretization lost positivity");

    TruncatedDualSolution sol;
    sol.R = R;
    sol.lambda_R = pp.lambda;
    sol.grid = grid;
    sol.k = k;

    // Normalization: sup over [0, A] equals 1 with A the crossover rounded
    // up to a grid edge.
    const auto edge_it =
        std::lower_bound(G.edges.begin(), G.edges.end(), A_cross);
    const double A_edge =
        (edge_it == G.edges.end()) ? G.edges.back() : *edge_it;
    double sup_window = 0.0;
    for (int i = 0; i < n && G.nodes[i] <= A_edge; ++i)
        sup_window = std::max(sup_window, pp.v[i]);
    if (sup_window <= 0.0) sup_window = sup_all;
    sol.A_norm = A_edge;
    sol.phi.resize(n);
    for (int i = 0; i < n; ++i) sol.phi[i] = pp.v[i] / sup_window;

    // Residual and empirical Lemma-2.3 constant.
    double res = 0.0, sup_phi = 0.0, bound_C = 0.0;
    for (int i = 0; i < n; ++i) {
        double Ap = 0.0;
        const double* row = &A[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) Ap += row[j] * sol.phi[j];
        res = std::max(res, std::fabs(Ap - sol.lambda_R * sol.phi[i]));
        sup_phi = std::max(sup_phi, sol.phi[i]);
        bound_C = std::max(bound_C, sol.phi[i] / (1.0 + std::pow(G.nodes[i], k)));
    }
    sol.residual = res / sup_phi;
    sol.bound_C = bound_C;
    return sol;
}

// ===========================================================================
// dual_eigen: R-doubling limit
// ===========================================================================

double DualEigen::phi_at(double x) const {
    return interp_loglog(grid->nodes, phi, x);
}

DualEigen dual_eigen(const Coefficients& coeffs, const FragmentKernel& kernel,
                     double tol, double R0, double k, int max_doublings,
                     const DualSolveOptions& opt) {
    if (tol <= 0.0) throw std::invalid_argument("dual_eigen: tol must be positive");
    DualEigen out;
    out.k = k;

    TruncatedDualSolution prev;
    double R = R0;
    for (int d = 0; d <= max_doublings; ++d) {
        TruncatedDualSolution sol = solve_truncated_dual(coeffs, kernel, R, k, opt);
        out.R_sequence.push_back(sol.R);
        out.lambda_sequence.push_back(sol.lambda_R);
        out.lambda = sol.lambda_R;
        out.grid = sol.grid;
        out.phi = sol.phi;
        out.A_norm = sol.A_norm;
        out.residual = sol.residual;

        if (d >= 1) {
            if (sol.lambda_R <= 0.0)
                throw std::runtime_error(
                    "dual eigenvalue stayed nonpositive as the window grew");
            const bool lam_ok =
                std::fabs(sol.lambda_R - prev.lambda_R) <=
                tol * std::max(std::fabs(sol.lambda_R), 1e-300);
            // phi agreement on the common window [x_min, prev R / 4].  The
            // eigenfunction is defined up to scale and each solve's sup-[0,A]
            // normalization lands on its own grid nodes, so the raw values
            // carry an O(cell-width) scale jitter between solves.  Compare
            // the window-renormalized shapes instead, sup-relative.
            const double lo =
                std::max(prev.grid->x_min, sol.grid->x_min) * (1.0 + 1e-12);
            const double hi = prev.R / 4.0;
            std::vector<double> a_win, b_win;
            for (std::size_t i = 0; i < prev.grid->nodes.size(); ++i) {
                const double y = prev.grid->nodes[i];
                if (y < lo || y > hi) continue;
                a_win.push_back(prev.phi[i]);
                b_win.push_back(interp_loglog(sol.grid->nodes, sol.phi, y));
            }
            double sup_a = 0.0, sup_b = 0.0;
            for (double v : a_win) sup_a = std::max(sup_a, v);
            for (double v : b_win) sup_b = std::max(sup_b, v);
            double sup_rel = a_win.empty() ? 1.0 : 0.0;
            for (std::size_t i = 0; i < a_win.size(); ++i)
                sup_rel = std::max(sup_rel,
                                   std::fabs(a_win[i] / std::max(sup_a, 1e-300) -
                                             b_win[i] / std::max(sup_b, 1e-300)));
            if (lam_ok && sup_rel <= tol) {
                out.converged = true;
                return out;
            }
        }
        prev = std::move(sol);
        R *= 2.0;
    }
    out.converged = false;
    return out;
}

// ===========================================================================
// direct_eigen: fixed point of the conservative semigroup
// ===========================================================================

EigenTriple direct_eigen(const Coefficients& coeffs, const FragmentKernel& kernel,
                         const DualEigen& dual, GridPtr grid,
                         const DirectEigenOptions& opt) {
    const Grid& G = *grid;
    const int n = G.size();

    double max_rate = 0.0;
    for (int i = 0; i < n; ++i)
        max_rate = std::max(max_rate, coeffs.B(G.nodes[i]) + dual.lambda);
    EvolutionConfig cfg;
    cfg.dt = opt.dt > 0.0 ? opt.dt : 0.45 / std::max(max_rate, 1e-12);
    if (opt.dt <= 0.0 && coeffs.is_power_law() &&
        coeffs.as_power_law().a == 1.0 && coeffs.as_power_law().g0 > 0.0) {
        // Exactly linear growth translates the log-spaced grid rigidly, so a
        // whole number of cells per step makes the transport remap lossless;
        // snap the automatic dt down to the nearest such multiple.  A
        // fractional shift would instead deposit across two cells and act as
        // numerical diffusion on the limit shape.
        const double h = std::log(G.edges[1] / G.edges[0]);
        const double cells_per_step = coeffs.as_power_law().g0 * cfg.dt / h;
        if (cells_per_step >= 1.0)
            cfg.dt = std::floor(cells_per_step) * h / coeffs.as_power_law().g0;
    }
    cfg.lambda = dual.lambda;
    cfg.mode = EvolutionMode::Conservative;
    cfg.phi = [&dual](double x) { return dual.phi_at(x); };
    cfg.splitting = opt.splitting;
    const Stepper stepper(grid, coeffs, kernel, cfg);

    GridMeasure f;
    f.grid = grid;
    f.mass.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        f.mass[i] = dual.phi_at(G.nodes[i]) * G.width(i) *
                    std::exp(-std::min(G.nodes[i], 700.0));
        total += f.mass[i];
    }
    for (double& m : f.mass) m /= total;

    const int steps_per_check =
        std::max(1, static_cast<int>(std::lround(opt.check_interval / cfg.dt)));
    auto normalized = [](const std::vector<double>& v) {
        double s = std::accumulate(v.begin(), v.end(), 0.0);
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / s;
        return out;
    };

    EigenTriple triple;
    triple.lambda = dual.lambda;
    triple.A_norm = dual.A_norm;
    triple.residual_phi = dual.residual;

    std::vector<double> history;
    std::vector<double> prev_norm = normalized(f.mass);
    double t = 0.0;
    std::string stop;
    while (true) {
        for (int s = 0; s < steps_per_check; ++s) stepper.step(f);
        t += steps_per_check * cfg.dt;
        std::vector<double> cur = normalized(f.mass);
        double d = 0.0;
        for (int i = 0; i < n; ++i) d += std::fabs(cur[i] - prev_norm[i]);
        prev_norm = std::move(cur);
        history.push_back(d);
        if (d < opt.tol) {
            triple.converged = true;
            stop = "consecutive-snapshot distance below tolerance";
            break;
        }
        const std::size_t h = history.size();
        if (h >= 9 && d > 10.0 * opt.tol) {
            const double back = history[h - 9];
            if (d > back * 0.98) {
                triple.converged = false;
                stop =
                    "distance plateaued above tolerance (oscillation or no "
                    "limit shape)";
                break;
            }
        }
        if (t >= opt.T_max) {
            triple.converged = false;
            stop = "time cap reached before the snapshot distance settled";
            break;
        }
    }
    triple.diagnostic = stop;

    // How fast the normalized shape was still moving when iteration stopped,
    // per unit time.  At convergence this is bounded by tol over the check
    // interval; in the oscillating no-limit case it reports the plateau.
    triple.residual_N = history.back() / (steps_per_check * cfg.dt);

    triple.N.grid = grid;
    triple.N.mass.resize(n);
    triple.phi.resize(n);
    double sumN = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = dual.phi_at(G.nodes[i]);
        triple.N.mass[i] = f.mass[i] / p;
        triple.phi[i] = p;
        sumN += triple.N.mass[i];
    }
    double cross = 0.0;
    for (int i = 0; i < n; ++i) {
        triple.N.mass[i] /= sumN;
        cross += triple.phi[i] * triple.N.mass[i];
    }
    for (int i = 0; i < n; ++i) triple.phi[i] /= cross;
    return triple;
}

// ===========================================================================
// Closed forms
// ===========================================================================

std::vector<double> mitosis_series_coefficients(int n_terms) {
    if (n_terms < 1)
        throw std::invalid_argument("mitosis series needs at least one term");
    std::vector<double> beta(n_terms);
    beta[0] = 1.0;
    for (int m = 1; m < n_terms; ++m)
        beta[m] = 2.0 * beta[m - 1] / (std::exp2(m) - 1.0);
    double S = 0.0;
    for (int m = 0; m < n_terms; ++m) {
        const double term = beta[m] / std::exp2(m + 1);
        S += (m % 2 == 0) ? term : -term;
    }
    for (double& b : beta) b /= S;
    return beta;  // now alpha_n with integral one
}

double explicit_N_density(const ExplicitCase& c, double x) {
    if (c.kind == ExplicitCase::Kind::SelfSimilar) {
        const double cc = c.b0 / (c.gamma * c.g0);
        const double C =
            std::pow(cc, 1.0 / c.gamma) * c.gamma / std::tgamma(1.0 / c.gamma);
        return C * std::exp(-cc * std::pow(x, c.gamma));
    }
    const std::vector<double> alpha = mitosis_series_coefficients(c.n_terms);
    double acc = 0.0;
    for (int m = 0; m < c.n_terms; ++m) {
        const double term = alpha[m] * std::exp(-std::exp2(m + 1) * x);
        acc += (m % 2 == 0) ? term : -term;
    }
    return acc;
}

double explicit_phi_value(const ExplicitCase& c, double x) {
    if (c.kind == ExplicitCase::Kind::SelfSimilar) {
        const double cc = c.b0 / (c.gamma * c.g0);
        return std::pow(cc, 1.0 / c.gamma) * std::tgamma(1.0 / c.gamma) /
               std::tgamma(2.0 / c.gamma) * x;
    }
    return 1.0;
}

EigenTriple explicit_eigen(const ExplicitCase& c, GridPtr grid) {
    const Grid& G = *grid;
    const int n = G.size();
    EigenTriple triple;
    triple.N.grid = grid;
    triple.N.mass.assign(n, 0.0);
    triple.phi.resize(n);
    triple.converged = true;
    triple.residual_N = 0.0;
    triple.residual_phi = 0.0;

    if (c.kind == ExplicitCase::Kind::SelfSimilar) {
        triple.lambda = c.g0;
        for (int i = 0; i < n; ++i) {
            const double a = G.edges[i], b = G.edges[i + 1];
            double acc = 0.0;
            for (int q = 0; q < 8; ++q) {
                const double x = 0.5 * (a + b) + 0.5 * (b - a) * kG8Node[q];
                acc += 0.5 * (b - a) * kG8Weight[q] * explicit_N_density(c, x);
            }
            triple.N.mass[i] = acc;
            triple.phi[i] = explicit_phi_value(c, G.nodes[i]);
        }
        triple.diagnostic = "closed-form self-similar eigenelements";
    } else {
        triple.lambda = 1.0;
        const std::vector<double> alpha = mitosis_series_coefficients(c.n_terms);
        double worst_negative = 0.0;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int m = 0; m < c.n_terms; ++m) {
                const double rate = std::exp2(m + 1);
                const double cell =
                    (std::exp(-rate * G.edges[i]) - std::exp(-rate * G.edges[i + 1])) /
                    rate;
                acc += (m % 2 == 0) ? alpha[m] * cell : -alpha[m] * cell;
            }
            worst_negative = std::min(worst_negative, acc);
            triple.N.mass[i] = std::max(acc, 0.0);
            triple.phi[i] = 1.0;
        }
        triple.diagnostic =
            worst_negative < -1e-12
                ? "closed-form mitosis series; truncation dipped negative"
                : "closed-form mitosis series";
    }

    double sumN = std::accumulate(triple.N.mass.begin(), triple.N.mass.end(), 0.0);
    double cross = 0.0;
    for (int i = 0; i < n; ++i) {
        triple.N.mass[i] /= sumN;
        cross += triple.phi[i] * triple.N.mass[i];
    }
    for (int i = 0; i < n; ++i) triple.phi[i] /= cross;
    return triple;
}

}  // namespace gf
