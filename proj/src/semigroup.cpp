#include "gfgap/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace gf {

namespace {

// ===========================================================================
// Quadrature tables
// ===========================================================================

// 3-point Gauss-Legendre on [0, 1]: exact for quintics, used for the
// survival exponent along one characteristic step.
constexpr double kG3Node[3] = {0.11270166537925831, 0.5, 0.88729833462074169};
constexpr double kG3Weight[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// 4-point Gauss-Legendre on [-1, 1], used per panel of the log-axis
// composite rule for int (B + lambda)/g.
constexpr double kG4Node[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
constexpr double kG4Weight[4] = {0.34785484513745385, 0.65214515486254614,
                                 0.65214515486254614, 0.34785484513745385};

// int_u^{hi} (B(v) + lambda)/g(v) dv on the log axis, 8 GL4 panels.
double rate_integral_to(const Coefficients& coeffs, double lambda, double u,
                        double hi) {
    if (u >= hi) return 0.0;
    const double s_lo = std::log(u), s_hi = std::log(hi);
    const int panels = 8;
    const double ds = (s_hi - s_lo) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = s_lo + (p + 0.5) * ds;
        for (int q = 0; q < 4; ++q) {
            const double s = c + 0.5 * ds * kG4Node[q];
            const double v = std::exp(s);
            acc += 0.5 * ds * kG4Weight[q] * (coeffs.B(v) + lambda) / coeffs.g(v) * v;
        }
    }
    return acc;
}

// exp(-int_0^t (B + lambda)(X_tau(x0)) dtau) by 3-point Gauss in tau.
double survival_along(const Flow& flow, const Coefficients& coeffs,
                      double lambda, double x0, double t) {
    if (t <= 0.0) return 1.0;
    double acc = 0.0;
    for (int q = 0; q < 3; ++q) {
        const double x = flow.value(t * kG3Node[q], x0);
        acc += kG3Weight[q] * (coeffs.B(x) + lambda);
    }
    return std::exp(-t * acc);
}

void require_same_grid(const GridMeasure& state, const Grid& grid) {
    const Grid& sg = *state.grid;
    if (sg.size() != grid.size() || sg.x_min != grid.x_min ||
        sg.x_max != grid.x_max) {
        throw std::invalid_argument("stepper: state lives on a different grid");
    }
}

int mitosis_shift(const Grid& grid) {
    if (grid.scheme != GridScheme::DyadicLog) {
        throw std::invalid_argument(
            "equal mitosis needs a dyadic-log grid so x/2 is an exact cell shift");
    }
    return grid.cells_per_octave;
}

}  // namespace

// ===========================================================================
// Fragmentation gain
// ===========================================================================

GainResult fragmentation_gain(const GridMeasure& mu, const FragmentKernel& kernel,
                              const Coefficients& coeffs) {
    const Grid& grid = *mu.grid;
    const int n = grid.size();
    GainResult out;
    out.rate.assign(n, 0.0);

    if (kernel.kind == KernelKind::EqualMitosis) {
        const int q = mitosis_shift(grid);
        for (int j = 0; j < n; ++j) {
            const double deposit = 2.0 * coeffs.B(grid.nodes[j]) * mu.mass[j];
            if (j >= q) {
                out.rate[j - q] += deposit;
            } else {
                out.sub_window_rate += deposit;
            }
        }
        return out;
    }
    if (kernel.kind != KernelKind::Uniform) {
        throw std::invalid_argument(
            "custom fragment densities support moment checks, not evolution");
    }

    // Uniform daughters: parent j spreads 2 B_j M_j / y_j per unit length on
    // (0, y_j).  Cells strictly below j see their full width; cell j sees the
    // partial overlap (y_j - e_j); the sub-window (0, x_min) sees x_min.
    // Suffix sums make the deposit scan O(n).
    std::vector<double> r(n + 1, 0.0);  // r[j] = B_j M_j / y_j; r[n] = 0 pad
    for (int j = 0; j < n; ++j)
        r[j] = coeffs.B(grid.nodes[j]) * mu.mass[j] / grid.nodes[j];
    std::vector<double> suffix(n + 1, 0.0);
    for (int j = n - 1; j >= 0; --j) suffix[j] = suffix[j + 1] + r[j];

    for (int i = 0; i < n; ++i) {
        const double w = grid.width(i);
        const double partial = grid.nodes[i] - grid.edges[i];
        out.rate[i] = 2.0 * (w * suffix[i + 1] + partial * r[i]);
    }
    out.sub_window_rate = 2.0 * grid.x_min * suffix[0];
    return out;
}

GainResult fragmentation_gain_reference(const GridMeasure& mu,
                                        const FragmentKernel& kernel,
                                        const Coefficients& coeffs) {
    const Grid& grid = *mu.grid;
    const int n = grid.size();
    GainResult out;
    out.rate.assign(n, 0.0);

    if (kernel.kind == KernelKind::EqualMitosis) {
        mitosis_shift(grid);  // validate the grid
        for (int j = 0; j < n; ++j) {
            const double half = 0.5 * grid.nodes[j];
            const double deposit = 2.0 * coeffs.B(grid.nodes[j]) * mu.mass[j];
            if (half < grid.x_min) {
                out.sub_window_rate += deposit;
            } else {
                out.rate[grid.cell_of(half)] += deposit;
            }
        }
        return out;
    }
    if (kernel.kind != KernelKind::Uniform) {
        throw std::invalid_argument(
            "custom fragment densities support moment checks, not evolution");
    }

    for (int j = 0; j < n; ++j) {
        const double y = grid.nodes[j];
        const double density = 2.0 * coeffs.B(y) * mu.mass[j] / y;
        for (int i = 0; i <= j; ++i) {
            const double overlap =
                std::clamp(std::min(grid.edges[i + 1], y) - grid.edges[i], 0.0,
                           grid.width(i));
            out.rate[i] += density * overlap;
        }
        out.sub_window_rate += density * grid.x_min;
    }
    return out;
}

GainResult fragmentation_gain_parallel(const GridMeasure& mu,
                                       const FragmentKernel& kernel,
                                       const Coefficients& coeffs) {
    const Grid& grid = *mu.grid;
    const int n = grid.size();

    if (kernel.kind != KernelKind::Uniform)
        return fragmentation_gain(mu, kernel, coeffs);

    GainResult out;
    out.rate.assign(n, 0.0);
    std::vector<double> density(n);
    for (int j = 0; j < n; ++j)
        density[j] = 2.0 * coeffs.B(grid.nodes[j]) * mu.mass[j] / grid.nodes[j];

    // Each receiving cell scans its parents independently; writes are
    // disjoint so the schedule cannot affect the result.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double acc = density[i] * (grid.nodes[i] - grid.edges[i]);
        double full = 0.0;
        for (int j = i + 1; j < n; ++j) full += density[j];
        out.rate[i] = acc + full * grid.width(i);
    }
    for (int j = 0; j < n; ++j) out.sub_window_rate += density[j] * grid.x_min;
    return out;
}

// ===========================================================================
// Stepper
// ===========================================================================

Stepper::Stepper(GridPtr grid, Coefficients coeffs, FragmentKernel kernel,
                 EvolutionConfig config)
    : grid_(std::move(grid)),
      coeffs_(std::move(coeffs)),
      kernel_(std::move(kernel)),
      config_(std::move(config)) {
    const Grid& G = *grid_;
    const int n = G.size();
    if (config_.dt <= 0.0)
        throw std::invalid_argument("stepper: dt must be positive");
    if (config_.mode == EvolutionMode::Conservative && !config_.phi)
        throw std::invalid_argument("stepper: conservative mode needs phi");

    B_nodes_.resize(n);
    double max_rate = 0.0;
    for (int i = 0; i < n; ++i) {
        B_nodes_[i] = coeffs_.B(G.nodes[i]);
        max_rate = std::max(max_rate, B_nodes_[i] + config_.lambda);
    }

    if (config_.phi) {
        phi_nodes_.resize(n);
        for (int i = 0; i < n; ++i) phi_nodes_[i] = config_.phi(G.nodes[i]);
    }

    pure_fragmentation_ =
        coeffs_.is_power_law() && coeffs_.as_power_law().g0 == 0.0;
    if (pure_fragmentation_) return;  // exact exponential: no CFL bound

    if (config_.dt * max_rate > 0.5 + 1e-12) {
        throw std::invalid_argument(
            "stepper: dt * max(B + lambda) exceeds 1/2; shrink the step");
    }

    const Flow flow(coeffs_);
    image_edges_.resize(n + 1);
    for (int i = 0; i <= n; ++i)
        image_edges_[i] = flow.value(config_.dt, G.edges[i]);
    survival_.resize(n);
    for (int i = 0; i < n; ++i)
        survival_[i] =
            survival_along(flow, coeffs_, config_.lambda, G.nodes[i], config_.dt);
    if (config_.mode == EvolutionMode::Conservative) {
        // The conjugation stretch exp(+int_0^dt (g phi'/phi)(X_tau) dtau)
        // telescopes to phi(X_dt(y))/phi(y): no derivative of phi needed.
        survival_f_.resize(n);
        for (int i = 0; i < n; ++i) {
            const double image = flow.value(config_.dt, G.nodes[i]);
            survival_f_[i] =
                survival_[i] * config_.phi(image) / phi_nodes_[i];
        }
        // phi at the midpoint of [e_j, node_j]: the uniform kernel's deposit
        // into the parent's own cell covers only that lower half, and
        // weighting it at the cell node would bias the invariant by O(h^2).
        phi_self_lo_.resize(n);
        for (int i = 0; i < n; ++i)
            phi_self_lo_[i] = config_.phi(0.5 * (G.edges[i] + G.nodes[i]));
    }

    if (!config_.subgrid_refeed) return;
    if (kernel_.kind == KernelKind::Uniform) {
        // Average over a uniform deposit position u in (0, x_min) of the
        // probability of growing back to x_min unfragmented:
        //   sigma = (1/x_min) int_0^{x_min} exp(-int_u^{x_min} (B+l)/g) du.
        const int m = 512;
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            const double u = G.x_min * (j + 0.5) / m;
            acc += std::exp(-rate_integral_to(coeffs_, config_.lambda, u, G.x_min));
        }
        sigma_ = acc / m;
    } else if (kernel_.kind == KernelKind::EqualMitosis) {
        const int q = mitosis_shift(G);
        const int parents = std::min(q, n);
        mitosis_refeed_sigma_.assign(parents, 0.0);
        for (int j = 0; j < parents; ++j) {
            const double d = 0.5 * G.nodes[j];  // daughter position, < x_min
            const double back = flow.H(G.x_min) - flow.H(d);
            mitosis_refeed_sigma_[j] =
                survival_along(flow, coeffs_, config_.lambda, d, back);
        }
    }
}

void Stepper::apply_gain(const std::vector<double>& v, std::vector<double>& out,
                         double& sub_rate, bool f_units) const {
    GridMeasure view;
    view.grid = grid_;
    if (f_units) {
        // deposit(x <- y) carries phi(x)/phi(y): divide parents, multiply
        // receivers.
        view.mass.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            view.mass[i] = v[i] / phi_nodes_[i];
    } else {
        view.mass = v;
    }
    GainResult gain = fragmentation_gain(view, kernel_, coeffs_);
    out = std::move(gain.rate);
    sub_rate = gain.sub_window_rate;
    if (config_.subgrid_refeed && !pure_fragmentation_) {
        if (kernel_.kind == KernelKind::Uniform) {
            out[0] += sigma_ * sub_rate;
            sub_rate *= 1.0 - sigma_;
        } else if (kernel_.kind == KernelKind::EqualMitosis) {
            // Re-derive the per-parent sub-window deposits so each can carry
            // its own grow-back survival.
            sub_rate = 0.0;
            for (std::size_t j = 0; j < mitosis_refeed_sigma_.size(); ++j) {
                const double deposit = 2.0 * B_nodes_[j] * view.mass[j];
                out[0] += mitosis_refeed_sigma_[j] * deposit;
                sub_rate += (1.0 - mitosis_refeed_sigma_[j]) * deposit;
            }
        }
    }
    if (f_units) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= phi_nodes_[i];
        if (kernel_.kind == KernelKind::Uniform) {
            // The parent's own cell receives daughters only on the lower half
            // [e_j, node_j]; re-weight that partial deposit at the overlap
            // midpoint instead of the cell node.
            const Grid& G = *grid_;
            for (std::size_t j = 0; j < out.size(); ++j) {
                const double r = B_nodes_[j] * view.mass[j] / G.nodes[j];
                const double partial = G.nodes[j] - G.edges[j];
                out[j] += 2.0 * partial * r * (phi_self_lo_[j] - phi_nodes_[j]);
            }
        }
        sub_rate *= phi_nodes_[0];  // diagnostic escape accounting
    }
}

void Stepper::gain_half_step(std::vector<double>& v, double h, double& escaped,
                             bool f_units) const {
    const int n = static_cast<int>(v.size());
    std::vector<double> r1, r2;
    double s1 = 0.0, s2 = 0.0;
    apply_gain(v, r1, s1, f_units);
    apply_gain(r1, r2, s2, f_units);
    for (int i = 0; i < n; ++i) v[i] += h * r1[i] + 0.5 * h * h * r2[i];
    escaped += h * s1 + 0.5 * h * h * s2;
}

void Stepper::split_step(std::vector<double>& v, double& escaped,
                         bool f_units) const {
    const Grid& G = *grid_;
    const int n = G.size();
    const double dt = config_.dt;
    const std::vector<double>& surv = f_units ? survival_f_ : survival_;

    if (config_.splitting == SplitScheme::Strang)
        gain_half_step(v, 0.5 * dt, escaped, f_units);

    for (int i = 0; i < n; ++i) v[i] *= surv[i];
    std::vector<double> pushed(n, 0.0);
    push_forward_edges(G, image_edges_, v, pushed, escaped);
    v = std::move(pushed);

    if (config_.splitting == SplitScheme::Strang) {
        gain_half_step(v, 0.5 * dt, escaped, f_units);
    } else {
        std::vector<double> r1;
        double s1 = 0.0;
        apply_gain(v, r1, s1, f_units);
        for (int i = 0; i < n; ++i) v[i] += dt * r1[i];
        escaped += dt * s1;
    }
}

void Stepper::pure_fragmentation_step(std::vector<double>& m,
                                      double& escaped) const {
    // Whole generator A m = -(B + lambda) m + gain(m) in one exponential:
    // e^{dt A} = e^{-c dt} e^{dt (A + c I)} with c = max(B + lambda), so every
    // Taylor term of the shifted series is nonnegative.
    const int n = static_cast<int>(m.size());
    double c = 0.0;
    for (int i = 0; i < n; ++i) c = std::max(c, B_nodes_[i] + config_.lambda);
    const double dt = config_.dt;

    const double leak_before = [&] {
        std::vector<double> r;
        double s = 0.0;
        apply_gain(m, r, s, false);
        return s;
    }();

    std::vector<double> term = m;
    std::vector<double> sum = m;
    for (int k = 1; k <= 200; ++k) {
        std::vector<double> next(n, 0.0);
        double s = 0.0;
        apply_gain(term, next, s, false);
        const double f = dt / k;
        double sup_term = 0.0, sup_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            next[i] = f * (next[i] + (c - B_nodes_[i] - config_.lambda) * term[i]);
            sum[i] += next[i];
            sup_term = std::max(sup_term, next[i]);
            sup_sum = std::max(sup_sum, sum[i]);
        }
        term = std::move(next);
        if (sup_term <= 1e-18 * sup_sum) break;
    }
    const double scale = std::exp(-c * dt);
    for (int i = 0; i < n; ++i) m[i] = scale * sum[i];

    const double leak_after = [&] {
        std::vector<double> r;
        double s = 0.0;
        apply_gain(m, r, s, false);
        return s;
    }();
    escaped += 0.5 * dt * (leak_before + leak_after);
}

void Stepper::step(GridMeasure& state) const {
    require_same_grid(state, *grid_);
    if (pure_fragmentation_) {
        if (config_.mode == EvolutionMode::Conservative) {
            // No transport: the exact conjugation through phi commutes with
            // the exponential, so step m = f/phi and conjugate back.
            const int n = static_cast<int>(state.mass.size());
            std::vector<double> m(n);
            for (int i = 0; i < n; ++i) m[i] = state.mass[i] / phi_nodes_[i];
            double esc = 0.0;
            pure_fragmentation_step(m, esc);
            for (int i = 0; i < n; ++i) state.mass[i] = phi_nodes_[i] * m[i];
            state.escaped_mass += esc;
            return;
        }
        pure_fragmentation_step(state.mass, state.escaped_mass);
        return;
    }
    split_step(state.mass, state.escaped_mass,
               config_.mode == EvolutionMode::Conservative);
}

double Stepper::conserved_functional(const GridMeasure& state) const {
    const int n = static_cast<int>(state.mass.size());
    double acc = 0.0;
    if (config_.mode == EvolutionMode::Conservative) {
        for (int i = 0; i < n; ++i) acc += state.mass[i];
    } else if (!phi_nodes_.empty()) {
        for (int i = 0; i < n; ++i) acc += phi_nodes_[i] * state.mass[i];
    } else {
        for (int i = 0; i < n; ++i) acc += state.mass[i];
    }
    return acc;
}

// ===========================================================================
// Trajectories
// ===========================================================================

Trajectory evolve(const Stepper& stepper, GridMeasure n0, double T,
                  int snapshot_stride) {
    if (snapshot_stride < 1)
        throw std::invalid_argument("evolve: snapshot_stride must be >= 1");
    const double dt = stepper.config().dt;
    const long steps = (T <= 0.0) ? 0 : std::lround(std::ceil(T / dt - 1e-9));

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.snapshots.push_back(n0);
    traj.conserved_series.push_back(stepper.conserved_functional(n0));
    for (long k = 1; k <= steps; ++k) {
        stepper.step(n0);
        if (k % snapshot_stride == 0 || k == steps) {
            traj.times.push_back(static_cast<double>(k) * dt);
            traj.snapshots.push_back(n0);
            traj.conserved_series.push_back(stepper.conserved_functional(n0));
        }
    }
    return traj;
}

}  // namespace gf
