#include "gfgap/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gf {

// ===========================================================================
// LogLogCurve
// ===========================================================================

LogLogCurve::LogLogCurve(const std::vector<double>& xs,
                         const std::vector<double>& ys) {
    if (xs.size() < 2 || xs.size() != ys.size())
        throw std::invalid_argument("curve needs >= 2 matching samples");
    log_x_.reserve(xs.size());
    log_y_.reserve(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= 0.0 || ys[i] <= 0.0)
            throw std::invalid_argument("curve samples must be positive");
        if (i > 0 && xs[i] <= xs[i - 1])
            throw std::invalid_argument("curve abscissae must be increasing");
        log_x_.push_back(std::log(xs[i]));
        log_y_.push_back(std::log(ys[i]));
    }
}

std::size_t LogLogCurve::segment_of(double lx) const {
    // Index i with the active segment [log_x_[i], log_x_[i+1]]; the end
    // segments extend beyond the sampled range (power-law continuation).
    if (lx <= log_x_.front()) return 0;
    if (lx >= log_x_.back()) return log_x_.size() - 2;
    auto it = std::upper_bound(log_x_.begin(), log_x_.end(), lx);
    return static_cast<std::size_t>(it - log_x_.begin()) - 1;
}

double LogLogCurve::value(double x) const {
    if (x <= 0.0) throw std::domain_error("curve evaluated at x <= 0");
    const double lx = std::log(x);
    const std::size_t s = segment_of(lx);
    const double slope =
        (log_y_[s + 1] - log_y_[s]) / (log_x_[s + 1] - log_x_[s]);
    return std::exp(log_y_[s] + slope * (lx - log_x_[s]));
}

double LogLogCurve::local_exponent(double x) const {
    if (x <= 0.0) throw std::domain_error("curve evaluated at x <= 0");
    const std::size_t s = segment_of(std::log(x));
    return (log_y_[s + 1] - log_y_[s]) / (log_x_[s + 1] - log_x_[s]);
}

// ===========================================================================
// Coefficients
// ===========================================================================

Coefficients Coefficients::power_law(double a, double g0, double b, double b0) {
    if (g0 < 0.0 || b0 < 0.0)
        throw std::invalid_argument("rate prefactors must be nonnegative");
    if (g0 == 0.0 && b0 == 0.0)
        throw std::invalid_argument("growth and fragmentation cannot both vanish");
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("rate exponents must be finite");
    Coefficients c;
    c.is_power_law_ = true;
    c.pl_ = {a, g0, b, b0};
    c.xi_ = std::max(0.0, -a);
    return c;
}

Coefficients Coefficients::tabulated(LogLogCurve g, LogLogCurve B, double xi) {
    if (g.empty() || B.empty())
        throw std::invalid_argument("tabulated coefficients need both curves");
    if (xi < 0.0) throw std::invalid_argument("xi must be nonnegative");
    Coefficients c;
    c.is_power_law_ = false;
    c.g_curve_ = std::move(g);
    c.B_curve_ = std::move(B);
    c.xi_ = xi;
    return c;
}

double Coefficients::g(double x) const {
    if (is_power_law_) {
        if (pl_.g0 == 0.0) return 0.0;
        return pl_.g0 * std::pow(x, pl_.a);
    }
    return g_curve_.value(x);
}

double Coefficients::B(double x) const {
    if (is_power_law_) {
        if (pl_.b0 == 0.0) return 0.0;
        return pl_.b0 * std::pow(x, pl_.b);
    }
    return B_curve_.value(x);
}

const PowerLawCoeffs& Coefficients::as_power_law() const {
    if (!is_power_law_)
        throw std::logic_error("coefficients are tabulated, not power-law");
    return pl_;
}

double Coefficients::growth_exponent_at_zero() const {
    if (is_power_law_) return pl_.a;
    return g_curve_.local_exponent(std::exp(g_curve_.log_x().front()) * 0.5);
}

// ===========================================================================
// Fragment kernel moments
// ===========================================================================

double moment(const FragmentKernel& kernel, double k) {
    switch (kernel.kind) {
        case KernelKind::Uniform:
            if (k <= -1.0)
                throw std::domain_error("uniform kernel moment needs k > -1");
            return 2.0 / (k + 1.0);
        case KernelKind::EqualMitosis:
            return std::exp2(1.0 - k);
        case KernelKind::CustomDensity: {
            if (!kernel.custom_p)
                throw std::invalid_argument("custom kernel without density");
            // Midpoint rule (avoids the endpoints, where z^k or p may be
            // singular but integrable).
            const int n = 1 << 14;
            const double h = 1.0 / n;
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                const double z = (i + 0.5) * h;
                s += std::pow(z, k) * kernel.custom_p(z);
            }
            return s * h;
        }
    }
    throw std::logic_error("unknown kernel kind");
}

bool kernel_rate_consistency(const FragmentKernel& kernel,
                             const Coefficients& coeffs,
                             const std::vector<double>& probe_xs) {
    // Size redistributed per event at parent size x:
    //   int_0^x (y/x) * (1/x) p(y/x) B(x) dy = p_1 B(x),
    // so consistency with the loss term B(x) m(x) holds iff p_1 = 1
    // wherever B(x) != 0.
    const double p1 = moment(kernel, 1.0);
    for (double x : probe_xs) {
        const double expected = coeffs.B(x);
        const double redistributed = p1 * expected;
        const double scale = std::max(std::abs(expected), 1e-300);
        if (std::abs(redistributed - expected) > 1e-6 * scale) return false;
    }
    return true;
}

// ===========================================================================
// Hypothesis checks
// ===========================================================================

namespace {

std::string format_g(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Probes 10^{-j} downward (toward 0) or 10^{+j} upward; the verdict on a
// limit statement for tabulated coefficients uses the last three probes:
// monotone by at least 1% per decade in the right direction is accepted,
// monotone the wrong way fails, anything flatter is undecidable.
Verdict limit_verdict(const std::vector<double>& last3, bool want_decreasing,
                      std::string& witness) {
    const double r0 = last3[0], r1 = last3[1], r2 = last3[2];
    const bool dec = r1 < r0 * 0.99 && r2 < r1 * 0.99;
    const bool inc = r1 > r0 * 1.01 && r2 > r1 * 1.01;
    if (want_decreasing ? dec : inc) return Verdict::Holds;
    if (want_decreasing ? inc : dec) {
        witness = "trend reversed: ratios " + format_g(r0) + ", " +
                  format_g(r1) + ", " + format_g(r2);
        return Verdict::Fails;
    }
    witness = "ratio trend flat across final probes: " + format_g(r0) + ", " +
              format_g(r1) + ", " + format_g(r2);
    return Verdict::UndecidableNumerically;
}

}  // namespace

HypothesisReport check_hypotheses(const Coefficients& coeffs,
                                  const FragmentKernel& kernel) {
    HypothesisReport rep;
    rep.xi = coeffs.xi();

    // --- balance: x B(x)/g(x) -> 0 at 0 and -> inf at inf -----------------
    if (coeffs.is_power_law()) {
        const auto& pl = coeffs.as_power_law();
        if (pl.g0 == 0.0) {
            rep.balance = {Verdict::Fails, "no transport (g = 0)"};
        } else if (pl.b0 == 0.0) {
            rep.balance = {Verdict::Fails, "no fragmentation (B = 0)"};
        } else if (pl.b < 0.0) {
            rep.balance = {Verdict::Fails,
                           "fragmentation exponent " + format_g(pl.b) +
                               " is negative"};
        } else if (pl.b - pl.a + 1.0 <= 0.0) {
            rep.balance = {Verdict::Fails,
                           "x B/g has exponent " + format_g(pl.b - pl.a + 1.0) +
                               " <= 0"};
        } else {
            rep.balance = {Verdict::Holds,
                           "x B/g ~ x^" + format_g(pl.b - pl.a + 1.0)};
        }
    } else {
        auto ratio = [&](double x) { return x * coeffs.B(x) / coeffs.g(x); };
        std::string w0, winf;
        const Verdict at0 = limit_verdict(
            {ratio(1e-10), ratio(1e-11), ratio(1e-12)}, true, w0);
        const Verdict atinf = limit_verdict(
            {ratio(1e10), ratio(1e11), ratio(1e12)}, false, winf);
        if (at0 == Verdict::Fails || atinf == Verdict::Fails) {
            rep.balance = {Verdict::Fails,
                           at0 == Verdict::Fails ? "at 0: " + w0
                                                 : "at inf: " + winf};
        } else if (at0 == Verdict::UndecidableNumerically ||
                   atinf == Verdict::UndecidableNumerically) {
            rep.balance = {Verdict::UndecidableNumerically,
                           at0 != Verdict::Holds ? "at 0: " + w0
                                                 : "at inf: " + winf};
        } else {
            rep.balance = {Verdict::Holds, "probed limits move as required"};
        }
    }

    // --- strict sublinearity of g (binding for equal mitosis) -------------
    // w g(x) < g(w x) for w in (0,1): halving a cell must less-than-halve
    // its growth rate, or the dyadic lattice of an equal split never mixes.
    if (coeffs.is_power_law()) {
        const auto& pl = coeffs.as_power_law();
        if (pl.g0 == 0.0) {
            rep.mitosis_growth = {Verdict::Fails, "no transport (g = 0)"};
        } else if (pl.a < 1.0) {
            rep.mitosis_growth = {Verdict::Holds,
                                  "growth exponent " + format_g(pl.a) + " < 1"};
        } else {
            rep.mitosis_growth = {Verdict::Fails,
                                  "growth exponent " + format_g(pl.a) +
                                      " >= 1: g(x/2) <= g(x)/2"};
        }
    } else {
        rep.mitosis_growth = {Verdict::Holds, ""};
        for (int j = -12; j <= 12; ++j) {
            const double x = std::pow(10.0, j);
            const double lhs = 0.5 * coeffs.g(x);
            const double rhs = coeffs.g(0.5 * x);
            if (rhs <= lhs * (1.0 + 1e-9)) {
                const bool equal = std::abs(rhs - lhs) <= 1e-9 * lhs;
                rep.mitosis_growth = {
                    equal ? Verdict::UndecidableNumerically : Verdict::Fails,
                    "g(x/2) vs g(x)/2 at x = " + format_g(x) + ": " +
                        format_g(rhs) + " vs " + format_g(lhs)};
                break;
            }
        }
        if (rep.mitosis_growth.verdict == Verdict::Holds)
            rep.mitosis_growth.witness = "g(x/2) > g(x)/2 at all probes";
    }

    // --- growth class near 0 ----------------------------------------------
    if (coeffs.is_power_law()) {
        const auto& pl = coeffs.as_power_law();
        if (pl.a == 1.0 && pl.g0 == 1.0)
            rep.growth_class = GrowthClass::ExactlyLinear;
        else if (pl.a < 1.0)
            rep.growth_class = GrowthClass::SublinearAt0;
        else
            rep.growth_class = GrowthClass::SuperlinearAt0;
    } else {
        rep.growth_class = coeffs.growth_exponent_at_zero() < 1.0
                               ? GrowthClass::SublinearAt0
                               : GrowthClass::SuperlinearAt0;
    }

    (void)kernel;  // the kernel selects which checks bind (all_hold)
    return rep;
}

}  // namespace gf
