#pragma once

#include <cmath>
#include <complex>
#include <limits>

namespace spider {

using cplx = std::complex<double>;

inline constexpr double two_pi = 6.283185307179586476925286766559;

// Principal logarithm, arg in (-pi, pi].  std::log already uses this
// convention; the alias exists so call sites say which branch they mean.
inline cplx principal_log(cplx w) { return std::log(w); }

// Integer power by repeated multiplication.  Branch-free, unlike
// std::pow(cplx, double) which goes through exp(p*log(z)).
inline cplx cpow_int(cplx base, int n)
{
    if (n < 0) return 1.0 / cpow_int(base, -n);
    cplx acc{1.0, 0.0};
    cplx b = base;
    while (n > 0) {
        if (n & 1) acc *= b;
        b *= b;
        n >>= 1;
    }
    return acc;
}

// Distinguished "escaped to infinity" value used when exp overflows.
inline cplx escape_value()
{
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
}

inline bool escaped(cplx z)
{
    return !std::isfinite(z.real()) || !std::isfinite(z.imag());
}

// Shift `raw` by a multiple of 2*pi so it lands within pi of `anchor`.
// Used to continue arguments (imaginary parts of logs) along a path.
inline double unwind_near(double raw, double anchor)
{
    return raw + two_pi * std::round((anchor - raw) / two_pi);
}

// Logarithm whose imaginary part is continued from a previous value
// instead of being folded into (-pi, pi].
inline cplx continued_log(cplx z, double prev_im)
{
    const cplx l = std::log(z);
    return {l.real(), unwind_near(l.imag(), prev_im)};
}

}  // namespace spider
