#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gf {

// ---------------------------------------------------------------------------
// Coefficients: growth rate g(x) (size/time) and fragmentation rate B(x)
// (1/time) on (0, inf).  Either an explicit power-law pair or tabulated
// curves interpolated piecewise-linearly in log-log coordinates (preserves
// positivity and power-law asymptotics; end segments extend as power laws).
// ---------------------------------------------------------------------------

struct PowerLawCoeffs {
    double a  = 1.0;   // growth exponent: g(x) = g0 * x^a
    double g0 = 1.0;
    double b  = 1.0;   // fragmentation exponent: B(x) = b0 * x^b
    double b0 = 1.0;
};

// Monotone-in-x piecewise-linear curve in log-log coordinates.
class LogLogCurve {
public:
    LogLogCurve() = default;
    // xs strictly increasing and positive, ys positive, same length >= 2.
    LogLogCurve(const std::vector<double>& xs, const std::vector<double>& ys);

    double value(double x) const;           // power-law extension beyond ends
    double local_exponent(double x) const;  // slope of the active segment
    bool empty() const { return log_x_.empty(); }

    const std::vector<double>& log_x() const { return log_x_; }
    const std::vector<double>& log_y() const { return log_y_; }

private:
    std::vector<double> log_x_;
    std::vector<double> log_y_;
    std::size_t segment_of(double lx) const;
};

class Coefficients {
public:
    // g(x) = g0 x^a, B(x) = b0 x^b.  g0 = 0 is accepted only as the
    // degenerate pure-fragmentation configuration (no transport).
    static Coefficients power_law(double a, double g0, double b, double b0);
    static Coefficients tabulated(LogLogCurve g, LogLogCurve B, double xi);

    double g(double x) const;
    double B(double x) const;

    bool is_power_law() const { return is_power_law_; }
    const PowerLawCoeffs& as_power_law() const;

    // xi >= 0 with g(x) = O(x^{-xi}) at 0: max(0, -a) for power laws,
    // user-declared for tabulated curves.
    double xi() const { return xi_; }

    // Growth exponent near 0 (a for power laws, probed end-segment slope
    // otherwise); used by hypothesis checks and the flow.
    double growth_exponent_at_zero() const;

    const LogLogCurve& g_curve() const { return g_curve_; }
    const LogLogCurve& B_curve() const { return B_curve_; }

private:
    Coefficients() = default;
    bool is_power_law_ = true;
    PowerLawCoeffs pl_{};
    LogLogCurve g_curve_{};
    LogLogCurve B_curve_{};
    double xi_ = 0.0;
};

// ---------------------------------------------------------------------------
// Fragment kernel: self-similar daughter distribution p on (0,1].
//   Uniform       p(z) = 2            (binary uniform fragmentation)
//   EqualMitosis  p    = 2*delta_{1/2} (equal binary splitting)
// z*p(z) integrates to 1 in both cases (one unit of size is redistributed
// per event).  A custom density can be injected for consistency testing
// only; the solvers accept the two built-in kinds.
// ---------------------------------------------------------------------------

enum class KernelKind { Uniform, EqualMitosis, CustomDensity };

struct FragmentKernel {
    KernelKind kind = KernelKind::Uniform;
    std::function<double(double)> custom_p;  // density on (0,1), tests only

    static FragmentKernel uniform() { return {KernelKind::Uniform, nullptr}; }
    static FragmentKernel mitosis() { return {KernelKind::EqualMitosis, nullptr}; }
    static FragmentKernel custom(std::function<double(double)> p) {
        return {KernelKind::CustomDensity, std::move(p)};
    }
};

// p_k = int_0^1 z^k p(dz).  Uniform: 2/(k+1), requires k > -1 (throws
// std::domain_error otherwise).  EqualMitosis: 2^{1-k}, any k.  Custom
// densities are integrated numerically.
double moment(const FragmentKernel& kernel, double k);

// Checks that the size redistributed per fragmentation event matches B:
// int_0^x (y/x) kappa(x,y) dy = B(x) at each probe, which for the
// self-similar kernel kappa(x,y) = (1/x) p(y/x) B(x) reduces to p_1 = 1.
bool kernel_rate_consistency(const FragmentKernel& kernel,
                             const Coefficients& coeffs,
                             const std::vector<double>& probe_xs);

// ---------------------------------------------------------------------------
// Hypothesis report
// ---------------------------------------------------------------------------

enum class Verdict { Holds, Fails, UndecidableNumerically };

enum class GrowthClass {
    SublinearAt0,    // int_0^1 1/g < inf  (power law: a < 1)
    SuperlinearAt0,  // int_0^1 1/g = inf and g is not exactly x
    ExactlyLinear    // g(x) = x
};

struct HypothesisCheck {
    Verdict verdict = Verdict::Holds;
    std::string witness;  // offending x, limit estimate, or short reason
};

struct HypothesisReport {
    HypothesisCheck balance;         // x*B/g -> 0 at 0 and -> inf at inf
                                     // (power law: b >= 0 and b - a + 1 > 0)
    HypothesisCheck mitosis_growth;  // w*g(x) < g(w*x): g grows slower than
                                     // linearly (power law: a < 1); binding
                                     // only for the mitosis kernel
    GrowthClass growth_class = GrowthClass::SublinearAt0;
    double xi = 0.0;

    bool all_hold(KernelKind kind) const {
        if (balance.verdict != Verdict::Holds) return false;
        if (kind == KernelKind::EqualMitosis &&
            mitosis_growth.verdict != Verdict::Holds)
            return false;
        return true;
    }
};

HypothesisReport check_hypotheses(const Coefficients& coeffs,
                                  const FragmentKernel& kernel);

}  // namespace gf
