#pragma once

#include <cmath>

namespace nodalgraph {

/// Fundamental solutions of u'' = -mu u with c(0)=1, c'(0)=0, s(0)=0, s'(0)=1,
/// evaluated at one point. mu = lambda - q_e.
struct Fundamental {
    double c = 1.0;
    double s = 0.0;
    double dc = 0.0;
    double ds = 1.0;
};

/// Trigonometric for mu > 0, hyperbolic for mu < 0, continued through mu = 0
/// by the power series when |mu| x^2 < 1e-4.
inline Fundamental fundamental(double mu, double x) {
    Fundamental f;
    const double z = mu * x * x;
    if (std::abs(z) < 1e-4) {
        f.c = 1.0 - z / 2.0 + z * z / 24.0 - z * z * z / 720.0 + z * z * z * z / 40320.0;
        f.s = x * (1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0 + z * z * z * z / 362880.0);
    } else if (mu > 0.0) {
        const double k = std::sqrt(mu);
        f.c = std::cos(k * x);
        f.s = std::sin(k * x) / k;
    } else {
        const double k = std::sqrt(-mu);
        f.c = std::cosh(k * x);
        f.s = std::sinh(k * x) / k;
    }
    f.dc = -mu * f.s;
    f.ds = f.c;
    return f;
}

/// Integrals over [0, len] of c^2, c s and s^2.
struct EdgeGram {
    double cc = 0.0;
    double cs = 0.0;
    double ss = 0.0;
};

/// Closed forms from the Wronskian identity c^2 + mu s^2 = 1 and (c s)' = c^2 - mu s^2:
/// int c s = s(l)^2 / 2 and int s^2 = (l - c s) / (2 mu); the latter cancels
/// badly for small |mu| l^2, where the series of s^2 = (1 - cos 2kx) / (2 k^2)
/// is integrated instead.
inline EdgeGram edge_gram(double mu, double len) {
    const Fundamental f = fundamental(mu, len);
    EdgeGram g;
    g.cs = 0.5 * f.s * f.s;
    const double z = mu * len * len;
    if (std::abs(z) < 0.5) {
        // sum_m (-z)^m 2^(2m+1) l^3 / ((2m+2)! (2m+3))
        double term_factor = 1.0;  // 2^(2m+1) / (2m+2)!
        double power = 1.0;        // (-z)^m
        double sum = 0.0;
        for (int m = 0; m < 40; ++m) {
            const double term = power * term_factor / (2.0 * m + 3.0);
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
            power *= -z;
            term_factor *= 4.0 / ((2.0 * m + 3.0) * (2.0 * m + 4.0));
        }
        g.ss = sum * len * len * len;
    } else {
        g.ss = (len - f.c * f.s) / (2.0 * mu);
    }
    g.cc = len - mu * g.ss;
    return g;
}

}  // namespace nodalgraph
