#include "gfgap/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gf {

namespace {

void require_exponents(double k, double K_w) {
    if (!(-1.0 < k && k < 1.0 && 1.0 < K_w))
        throw std::invalid_argument(
            "drift potential needs -1 < k < 1 < K; got incompatible exponents");
}

}  // namespace

double DriftCertificate::gamma_of_t0(double t0) const {
    return std::exp(-C1 * t0);
}

double phi_linear(double x, double k, double K_w, const Coefficients& coeffs) {
    require_exponents(k, K_w);
    const double c1 = (1.0 - K_w) / (1.0 + K_w);
    const double c2 = K_w - 0.5 * (k + 1.0);
    const double c3 = (1.0 - k) / (1.0 + k);
    const double c4 = 0.5 * (k - 1.0);
    const double B = coeffs.B(x);
    return c1 * B * std::pow(x, K_w - 1.0) + c2 * std::pow(x, K_w - 1.0) +
           c3 * B * std::pow(x, k - 1.0) + c4 * std::pow(x, k - 1.0);
}

double phi_sublinear(double x, double K_w, const Coefficients& coeffs,
                     const FragmentKernel& kernel) {
    const double p_K = moment(kernel, K_w);
    return (p_K - 1.0) * std::pow(x, K_w) * coeffs.B(x) +
           K_w * std::pow(x, K_w - 1.0) * coeffs.g(x);
}

double phi_superlinear(double x, double k, double K_w, const Coefficients& coeffs,
                       const FragmentKernel& kernel) {
    const double p_k = moment(kernel, k);
    const double p_K = moment(kernel, K_w);
    const double B = coeffs.B(x), g = coeffs.g(x);
    return (p_k - 1.0) * std::pow(x, k) * B + (p_K - 1.0) * std::pow(x, K_w) * B +
           k * std::pow(x, k - 1.0) * g + K_w * std::pow(x, K_w - 1.0) * g;
}

DriftCertificate drift_constants(DriftRegime regime, const WeightSpec& weight,
                                 const Coefficients& coeffs,
                                 const FragmentKernel& kernel,
                                 const std::function<double(double)>& phi,
                                 double lambda, const DriftOptions& opt) {
    const double k = weight.k_w, K_w = weight.K_w;
    DriftCertificate cert;
    cert.regime = regime;
    cert.weight = weight;
    cert.lambda = lambda;

    if (regime == DriftRegime::LinearGrowth) {
        require_exponents(k, K_w);
        if (!coeffs.is_power_law() || coeffs.as_power_law().a != 1.0 ||
            coeffs.as_power_law().g0 != 1.0)
            throw std::invalid_argument(
                "linear-growth drift recipe needs g(x) = x exactly");
        cert.C1 = 0.5 * (1.0 - k);
    } else {
        if (!phi)
            throw std::invalid_argument(
                "non-linear drift regimes need the dual eigenfunction phi");
        if (lambda <= 0.0)
            throw std::invalid_argument(
                "non-linear drift regimes need lambda > 0 (C1 = lambda)");
        cert.C1 = lambda;
    }

    // sup over log-spaced probes of Phi (linear) or Phi/phi (others).
    double sup = -std::numeric_limits<double>::infinity();
    int argmax = 0;
    double v_first = 0.0, v_last = 0.0;
    const int n = opt.probes;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        const double x = opt.probe_lo * std::pow(opt.probe_hi / opt.probe_lo, t);
        double v;
        switch (regime) {
            case DriftRegime::LinearGrowth:
                v = phi_linear(x, k, K_w, coeffs);
                break;
            case DriftRegime::SublinearAt0:
                v = phi_sublinear(x, K_w, coeffs, kernel) / phi(x);
                break;
            default:
                v = phi_superlinear(x, k, K_w, coeffs, kernel) / phi(x);
                break;
        }
        if (i == 0) v_first = v;
        if (i == n - 1) v_last = v;
        if (v > sup) { sup = v; argmax = i; }
    }

    if (regime == DriftRegime::LinearGrowth) {
        // Phi must dive to -inf at both window ends; the sup has to sit
        // strictly inside.
        if (argmax < 3 || argmax > n - 4 || v_first >= 0.0 || v_last >= 0.0)
            throw std::runtime_error(
                "drift potential sup is pinned to the probe window ends; the "
                "coefficient balance looks violated");
    } else {
        if (v_first > 0.5 * sup || v_last > 0.5 * sup)
            throw std::runtime_error(
                "drift ratio does not fall off at the probe window ends; the "
                "coefficient balance looks violated");
    }

    cert.C2 = opt.safety * std::max(sup, 1e-12);
    cert.K_d = (regime == DriftRegime::LinearGrowth) ? cert.C2 / cert.C1
                                                     : 1.0 + cert.C2 / cert.C1;
    cert.phi_provenance =
        (regime == DriftRegime::LinearGrowth) ? "closed-form" : "dual-solve";
    const WeightSpec W = weight;
    if (regime == DriftRegime::LinearGrowth) {
        cert.v_f = [W](double x) { return W(x) / x; };
    } else {
        const std::function<double(double)> p = phi;
        cert.v_f = [W, p](double x) { return W(x) / p(x); };
    }
    return cert;
}

DriftVerification verify_drift(const DriftCertificate& cert,
                               const Coefficients& coeffs,
                               const FragmentKernel& kernel, GridPtr grid,
                               const std::function<double(double)>& phi,
                               double lambda, double t0, int trials, double dt,
                               unsigned seed) {
    const Grid& G = *grid;
    const int n = G.size();

    double max_rate = 0.0;
    for (int i = 0; i < n; ++i)
        max_rate = std::max(max_rate, coeffs.B(G.nodes[i]) + lambda);
    double step = dt > 0.0 ? dt : 0.45 / std::max(max_rate, 1e-12);
    const int steps = std::max(1, static_cast<int>(std::ceil(t0 / step - 1e-9)));
    step = t0 / steps;  // land exactly on t0

    EvolutionConfig cfg;
    cfg.dt = step;
    cfg.lambda = lambda;
    cfg.mode = EvolutionMode::Conservative;
    cfg.phi = phi;
    const Stepper stepper(grid, coeffs, kernel, cfg);

    std::vector<double> vf(n);
    for (int i = 0; i < n; ++i) vf[i] = cert.v_f(G.nodes[i]);
    const double gamma = cert.gamma_of_t0(t0);

    std::vector<double> ratio(trials, 0.0);
    std::vector<std::string> label(trials);

#pragma omp parallel for schedule(static)
    for (int trial = 0; trial < trials; ++trial) {
        GridMeasure f;
        f.grid = grid;
        f.mass.assign(n, 0.0);
        if (trial == 0) {
            f.mass[0] = 1.0;
            label[trial] = "near-Dirac at the window bottom";
        } else if (trial == 1) {
            f.mass[n - 1] = 1.0;
            label[trial] = "near-Dirac at the window top";
        } else {
            std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 1000003u +
                                static_cast<std::uint64_t>(trial));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            if (trial % 2 == 0) {
                for (int i = 0; i < n; ++i) {
                    const double r = u(rng);
                    f.mass[i] = r * r * r;
                }
                label[trial] = "random full-support state";
            } else {
                const int c = static_cast<int>(u(rng) * n) % n;
                for (int j = std::max(0, c - 2); j <= std::min(n - 1, c + 2); ++j)
                    f.mass[j] = 1.0 + u(rng);
                label[trial] = "random bump at cell " + std::to_string(c);
            }
        }
        double total = 0.0;
        for (double m : f.mass) total += m;
        for (double& m : f.mass) m /= total;

        double lhs0 = 0.0;
        for (int i = 0; i < n; ++i) lhs0 += vf[i] * f.mass[i];
        for (int s = 0; s < steps; ++s) stepper.step(f);
        double lhs = 0.0;
        for (int i = 0; i < n; ++i) lhs += vf[i] * f.mass[i];
        const double rhs = gamma * lhs0 + cert.K_d;
        ratio[trial] = lhs / rhs;
    }

    DriftVerification rep;
    rep.trials = trials;
    for (int t = 0; t < trials; ++t) {
        if (ratio[t] > 1.01) ++rep.violations;
        if (ratio[t] > rep.worst_ratio) {
            rep.worst_ratio = ratio[t];
            rep.worst_initial = label[t];
        }
    }
    return rep;
}

}  // namespace gf
