#pragma once

#include <cmath>
#include <limits>

namespace gf {

// ---------------------------------------------------------------------------
// Sign + log-magnitude representation of a real.  The certificate chain
// multiplies probabilities of order exp(-1e7), far below the double range,
// so every certificate probability is carried in log-domain end to end.
// Zero is sign = 0 with log magnitude -inf.
// ---------------------------------------------------------------------------

struct LogReal {
    int sign = 0;       // -1, 0, +1
    double lg = -std::numeric_limits<double>::infinity();  // log |value|

    LogReal() = default;

    static LogReal from_double(double v) {
        LogReal r;
        if (v > 0) { r.sign = 1; r.lg = std::log(v); }
        else if (v < 0) { r.sign = -1; r.lg = std::log(-v); }
        return r;
    }
    static LogReal from_log(double lg_magnitude, int sign = 1) {
        LogReal r;
        r.sign = lg_magnitude == -std::numeric_limits<double>::infinity() ? 0 : sign;
        r.lg = lg_magnitude;
        return r;
    }
    static LogReal zero() { return LogReal(); }
    static LogReal one() { return from_log(0.0); }

    bool is_zero() const { return sign == 0; }
    bool positive() const { return sign > 0; }
    double to_double() const {
        if (sign == 0) return 0.0;
        return sign * std::exp(lg);
    }
    double log_value() const { return lg; }  // log magnitude

    LogReal operator-() const { LogReal r = *this; r.sign = -r.sign; return r; }

    friend LogReal operator*(const LogReal& a, const LogReal& b) {
        LogReal r;
        if (a.sign == 0 || b.sign == 0) return r;
        r.sign = a.sign * b.sign;
        r.lg = a.lg + b.lg;
        return r;
    }
    friend LogReal operator/(const LogReal& a, const LogReal& b) {
        LogReal r;
        if (a.sign == 0) return r;
        r.sign = a.sign * b.sign;
        r.lg = a.lg - b.lg;
        return r;
    }
    friend LogReal operator+(const LogReal& a, const LogReal& b) {
        if (a.sign == 0) return b;
        if (b.sign == 0) return a;
        if (a.sign == b.sign) {
            LogReal r;
            r.sign = a.sign;
            double hi = std::max(a.lg, b.lg), lo = std::min(a.lg, b.lg);
            r.lg = hi + std::log1p(std::exp(lo - hi));
            return r;
        }
        // Opposite signs: magnitude difference.
        const LogReal& big = a.lg >= b.lg ? a : b;
        const LogReal& small = a.lg >= b.lg ? b : a;
        if (big.lg == small.lg) return LogReal();
        LogReal r;
        r.sign = big.sign;
        r.lg = big.lg + std::log1p(-std::exp(small.lg - big.lg));
        return r;
    }
    friend LogReal operator-(const LogReal& a, const LogReal& b) { return a + (-b); }

    LogReal pow(double e) const {
        LogReal r = *this;
        r.lg *= e;  // valid for positive values (all certificate uses)
        return r;
    }

    friend bool operator<(const LogReal& a, const LogReal& b) {
        if (a.sign != b.sign) return a.sign < b.sign;
        if (a.sign == 0) return false;
        return a.sign > 0 ? a.lg < b.lg : a.lg > b.lg;
    }
    friend bool operator>(const LogReal& a, const LogReal& b) { return b < a; }
    friend bool operator<=(const LogReal& a, const LogReal& b) { return !(b < a); }
    friend bool operator>=(const LogReal& a, const LogReal& b) { return !(a < b); }
};

inline LogReal min(const LogReal& a, const LogReal& b) { return a < b ? a : b; }
inline LogReal max(const LogReal& a, const LogReal& b) { return a < b ? b : a; }

}  // namespace gf
