#include "gfgap/harris.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gf {

namespace {

// Fill alpha_bar, rho and C from the one-step defect eps_bar = 1 - alpha_bar.
// Below 1e-8 the defect is carried purely in log-domain: alpha_bar rounds to
// 1 in doubles, but rho = eps_bar/t0 (1 + O(eps)) stays positive.
void finish_certificate(HarrisCertificate& cert) {
    const double eps_d = cert.eps_bar.to_double();
    if (eps_d > 1e-8) {
        const double lg = std::log1p(-eps_d);
        cert.alpha_bar = LogReal::from_log(lg);
        cert.rho = LogReal::from_double(-lg / cert.t0);
    } else {
        cert.alpha_bar = LogReal::from_log(-eps_d);
        cert.rho = cert.eps_bar / LogReal::from_double(cert.t0);
    }
    cert.C = LogReal::one() / cert.alpha_bar;
}

}  // namespace

// ===========================================================================
// Certificate assembly
// ===========================================================================

HarrisCertificate doeblin_rate(LogReal alpha, double t0) {
    if (!(t0 > 0.0))
        throw std::invalid_argument("doeblin_rate: t0 must be positive");
    if (!alpha.positive() || LogReal::one() < alpha)
        throw std::invalid_argument("doeblin_rate: alpha must lie in (0, 1]");
    HarrisCertificate cert;
    cert.t0 = t0;
    cert.alpha = alpha;
    cert.eps_bar = alpha;  // alpha_bar = 1 - alpha on the whole space
    finish_certificate(cert);
    cert.diagnostic = "whole-space minorisation; no drift pair involved";
    return cert;
}

HarrisCertificate harris_rate(LogReal alpha, double gamma, double K_d,
                              double R, double t0) {
    if (!(t0 > 0.0))
        throw std::invalid_argument("harris_rate: t0 must be positive");
    if (!(K_d > 0.0))
        throw std::invalid_argument("harris_rate: K_d must be positive");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("harris_rate: gamma must lie in (0, 1)");
    if (!alpha.positive() || LogReal::one() < alpha)
        throw std::invalid_argument("harris_rate: alpha must lie in (0, 1]");
    const double gamma0 = gamma + 2.0 * K_d / R;
    if (!(R > 0.0) || !(gamma0 < 1.0)) {
        std::ostringstream msg;
        msg << "harris_rate: violated R > 2 K_d / (1 - gamma): R = " << R
            << ", 2 K_d / (1 - gamma) = " << 2.0 * K_d / (1.0 - gamma);
        throw std::invalid_argument(msg.str());
    }

    HarrisCertificate cert;
    cert.t0 = t0;
    cert.gamma = gamma;
    cert.K_d = K_d;
    cert.R = R;
    cert.alpha = alpha;
    cert.alpha0 = alpha * LogReal::from_double(0.5);
    cert.gamma0 = gamma0;
    cert.beta = cert.alpha0 / LogReal::from_double(K_d);

    // alpha_bar = max{1 - alpha + alpha0, (2 + R beta gamma0)/(2 + R beta)}
    // assembled as eps_bar = 1 - alpha_bar =
    //   min{alpha - alpha0, R beta (1 - gamma0) / (2 + R beta)}.
    const LogReal R_beta = LogReal::from_double(R) * cert.beta;
    // alpha - alpha0 = alpha * (1 - 1/2), factored so the defect survives any
    // depth: a direct LogReal subtraction underflows to zero once |log alpha|
    // exceeds 2^52, where the log can no longer represent the O(1) offset
    // between alpha and alpha0.
    const LogReal eps1 = cert.alpha * LogReal::from_double(0.5);
    const LogReal eps2 = R_beta * LogReal::from_double(1.0 - gamma0) /
                         (LogReal::from_double(2.0) + R_beta);
    cert.eps_bar = min(eps1, eps2);
    finish_certificate(cert);

    std::ostringstream diag;
    diag << "gamma0 = " << gamma0 << ", log beta = " << cert.beta.log_value()
         << ", log eps_bar = " << cert.eps_bar.log_value()
         << (cert.eps_bar <= eps1 ? " (weighted branch binds)"
                                  : " (coupling branch binds)");
    cert.diagnostic = diag.str();
    return cert;
}

HarrisCertificate selfsim_certificate(double b) {
    return selfsim_certificate(b, 2.0 * std::log(2.0));
}

HarrisCertificate selfsim_certificate(double b, double t0) {
    if (!(b > 0.0))
        throw std::invalid_argument("selfsim_certificate: b must be positive");
    if (!(t0 > 0.0))
        throw std::invalid_argument("selfsim_certificate: t0 must be positive");
    // e^{-t0/2} is exactly 1/2 at the default step time; keep that exact.
    const double gamma =
        t0 == 2.0 * std::log(2.0) ? 0.5 : std::exp(-0.5 * t0);
    const double K_d = 10.0 * std::pow(7.5, 1.0 / b + 0.5 * b);
    const double R = 4.0 * K_d / (1.0 - gamma);
    const double log_alpha = std::log(t0) + (b + 3.0) * std::log(R) -
                             2.0 * std::pow(R * std::exp(t0), b) / b;
    HarrisCertificate cert =
        harris_rate(LogReal::from_log(log_alpha), gamma, K_d, R, t0);
    std::ostringstream diag;
    diag << "explicit chain for g = x, B = x^" << b
         << ", uniform fragments, weight 1 + x^2: " << cert.diagnostic;
    cert.diagnostic = diag.str();
    return cert;
}

// ===========================================================================
// Finite-state oracle
// ===========================================================================

ChainOracleReport finite_chain_oracle(const std::vector<std::vector<double>>& P,
                                      const std::vector<double>& V_in,
                                      const ChainOracleParams& params) {
    const int n = static_cast<int>(P.size());
    if (n < 1 || n > 12)
        throw std::invalid_argument(
            "finite_chain_oracle: brute-force regime needs 1 <= n <= 12");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(P[i].size()) != n)
            throw std::invalid_argument("finite_chain_oracle: P is not square");
        double s = 0.0;
        for (double v : P[i]) {
            if (v < -1e-15)
                throw std::invalid_argument(
                    "finite_chain_oracle: negative transition probability");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("finite_chain_oracle: row " +
                                        std::to_string(i) + " sums to " +
                                        std::to_string(s));
    }
    std::vector<double> V = V_in;
    if (V.empty()) {
        V.resize(n);
        for (int i = 0; i < n; ++i) V[i] = std::exp2(i);
    }
    if (static_cast<int>(V.size()) != n)
        throw std::invalid_argument("finite_chain_oracle: V size mismatch");

    ChainOracleReport rep;
    rep.n_states = n;
    rep.n_trials = params.pairs;

    // Exact whole-space coupling constant: column minima.
    double alpha_star = 0.0;
    for (int j = 0; j < n; ++j) {
        double mn = P[0][j];
        for (int i = 1; i < n; ++i) mn = std::min(mn, P[i][j]);
        alpha_star += mn;
    }
    rep.alpha_star = alpha_star;
    rep.doeblin_failed = !(alpha_star > 0.0);

    // Drift constant read off the chain and the induced small set {V <= R}.
    const double gamma = params.gamma;
    std::vector<double> PV(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) PV[i] += P[i][j] * V[j];
    double K = 0.0;
    for (int i = 0; i < n; ++i) K = std::max(K, PV[i] - gamma * V[i]);
    rep.K_d = K;
    const double K_eff = std::max(K, 1e-9);
    const double R = params.R > 0.0 ? params.R : 4.0 * K_eff / (1.0 - gamma);
    rep.R = R;

    double alpha_S = 0.0;
    {
        bool any_in_S = false;
        for (int j = 0; j < n; ++j) {
            double mn = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i)
                if (V[i] <= R) { mn = std::min(mn, P[i][j]); any_in_S = true; }
            alpha_S += std::isfinite(mn) ? mn : 0.0;
        }
        if (!any_in_S) alpha_S = 0.0;
    }
    rep.small_set_alpha = std::min(alpha_S, 1.0);

    double abar_d = 1.0, beta_d = 0.0;
    rep.harris_ran =
        rep.small_set_alpha > 0.0 && R * (1.0 - gamma) > 2.0 * K_eff;
    if (rep.harris_ran) {
        const HarrisCertificate cert = harris_rate(
            LogReal::from_double(rep.small_set_alpha), gamma, K_eff, R,
            params.t0);
        rep.alpha_bar = cert.alpha_bar;
        abar_d = cert.alpha_bar.to_double();
        beta_d = cert.beta.to_double();
    } else if (alpha_star > 0.0) {
        rep.alpha_bar = LogReal::from_log(std::log1p(-alpha_star));
    } else {
        rep.alpha_bar = LogReal::one();
    }

    // Randomized zero-mass pairs; trials are independent and the per-trial
    // seed fixes the stream regardless of scheduling.
    const int pairs = params.pairs;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d_slack(pairs, inf), h_slack(pairs, inf);
    std::vector<int> d_viol(pairs, 0), h_viol(pairs, 0);
#pragma omp parallel for schedule(static)
    for (int tr = 0; tr < pairs; ++tr) {
        std::mt19937_64 rng(params.seed * 1000003ULL +
                            static_cast<std::uint64_t>(tr));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::vector<double> mu(n), nu(n);
        double sm = 0.0, sn = 0.0;
        for (int i = 0; i < n; ++i) {
            mu[i] = U(rng);
            sm += mu[i];
            nu[i] = U(rng);
            sn += nu[i];
        }
        std::vector<double> z(n);
        for (int i = 0; i < n; ++i) z[i] = mu[i] / sm - nu[i] / sn;

        // Doeblin: ten steps of total variation against (1 - alpha*)^k.
        std::vector<double> cur = z, next(n);
        double tv0 = 0.0;
        for (double v : cur) tv0 += std::abs(v);
        tv0 *= 0.5;
        for (int step = 1; step <= 10; ++step) {
            std::fill(next.begin(), next.end(), 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) next[j] += cur[i] * P[i][j];
            cur = next;
            double tv = 0.0;
            for (double v : cur) tv += std::abs(v);
            tv *= 0.5;
            const double bound = std::pow(1.0 - alpha_star, step) * tv0;
            const double slack = bound - tv;
            d_slack[tr] = std::min(d_slack[tr], slack);
            if (tv > bound + 1e-12 * (1.0 + tv0)) d_viol[tr] += 1;
        }

        // Harris: one step in the (1 + beta V)-weighted norm.
        if (rep.harris_ran) {
            double w0 = 0.0, w1 = 0.0;
            std::fill(next.begin(), next.end(), 0.0);
            for (int i = 0; i < n; ++i) {
                w0 += std::abs(z[i]) * (1.0 + beta_d * V[i]);
                for (int j = 0; j < n; ++j) next[j] += z[i] * P[i][j];
            }
            for (int j = 0; j < n; ++j)
                w1 += std::abs(next[j]) * (1.0 + beta_d * V[j]);
            const double bound = abar_d * w0;
            const double slack = bound - w1;
            h_slack[tr] = std::min(h_slack[tr], slack);
            if (w1 > bound + 1e-12 * (1.0 + w0)) h_viol[tr] += 1;
        }
    }
    rep.worst_doeblin_slack = inf;
    rep.worst_harris_slack = inf;
    for (int tr = 0; tr < pairs; ++tr) {
        rep.doeblin_violations += d_viol[tr];
        rep.harris_violations += h_viol[tr];
        rep.worst_doeblin_slack = std::min(rep.worst_doeblin_slack, d_slack[tr]);
        rep.worst_harris_slack = std::min(rep.worst_harris_slack, h_slack[tr]);
    }
    if (!std::isfinite(rep.worst_doeblin_slack)) rep.worst_doeblin_slack = 0.0;
    if (!std::isfinite(rep.worst_harris_slack)) rep.worst_harris_slack = 0.0;

    std::ostringstream sum;
    sum << "n=" << n << ": alpha*=" << alpha_star << ", K=" << K
        << ", R=" << R << ", alpha_S=" << rep.small_set_alpha
        << ", alpha_bar=" << rep.alpha_bar.to_double() << ", violations="
        << rep.violations() << "/" << pairs << " pairs";
    if (rep.doeblin_failed) sum << " [no whole-space coupling]";
    if (!rep.harris_ran) sum << " [weighted check skipped]";
    rep.summary = sum.str();
    return rep;
}

std::vector<std::vector<double>> random_stochastic_matrix(int n_states,
                                                          std::uint64_t seed,
                                                          double smoothing) {
    if (n_states < 1)
        throw std::invalid_argument("random_stochastic_matrix: n_states >= 1");
    if (!(smoothing >= 0.0 && smoothing < 1.0))
        throw std::invalid_argument(
            "random_stochastic_matrix: smoothing must lie in [0, 1)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::vector<double>> P(n_states, std::vector<double>(n_states));
    for (auto& row : P) {
        double s = 0.0;
        for (double& v : row) {
            v = U(rng);
            s += v;
        }
        for (double& v : row)
            v = (1.0 - smoothing) * v / s + smoothing / n_states;
    }
    return P;
}

ChainOracleReport random_chain_oracle(int n_states, int pairs,
                                      std::uint64_t seed, bool identity_chain) {
    std::vector<std::vector<double>> P;
    if (identity_chain) {
        P.assign(n_states, std::vector<double>(n_states, 0.0));
        for (int i = 0; i < n_states; ++i) P[i][i] = 1.0;
    } else {
        P = random_stochastic_matrix(n_states, seed);
    }
    ChainOracleParams params;
    params.pairs = pairs;
    params.seed = seed ^ 0x9e3779b97f4a7c15ULL;
    return finite_chain_oracle(P, {}, params);
}

}  // namespace gf
