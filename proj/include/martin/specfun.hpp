#pragma once

// Modified Bessel functions for the killed-Brownian-motion kernels.
//
// K_nu is provided for nu in {0, 1/2, 1, 3/2, ...}: half-integer orders in
// closed form, K0/K1 by power series (u <= 2) or Steed's continued fraction
// (u > 2), higher integer orders by upward recurrence. I0/I1 use the power
// series up to u = 20 and the Hankel expansion beyond.
//
// Every routine has an exponentially scaled variant so callers can form
// ratios in log space without underflow.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace martin::specfun {

/// Order nu = twice_order / 2 of a Macdonald function.
class HalfIntOrder {
public:
    constexpr explicit HalfIntOrder(int twice_order) : twice_(twice_order) {
        if (twice_order < 0) throw std::domain_error("HalfIntOrder: twice_order must be >= 0");
    }

    /// Order |d - 2| / 2 used by the d-dimensional Green kernel (K_{-nu} = K_nu).
    static constexpr HalfIntOrder for_dimension(int d) {
        return HalfIntOrder(d >= 2 ? d - 2 : 2 - d);
    }

    constexpr int twice_order() const noexcept { return twice_; }
    constexpr double value() const noexcept { return 0.5 * twice_; }
    constexpr bool is_integer() const noexcept { return twice_ % 2 == 0; }

private:
    int twice_;
};

inline constexpr double kBesselIOverflowBound = 700.0;

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

inline void require_positive_finite(double u, const char* fn) {
    if (!std::isfinite(u) || !(u > 0.0))
        throw std::domain_error(std::string(fn) + ": argument must be positive and finite");
}

struct K01 {
    double k0;
    double k1;
};

// I0 and I1 by their power series; accurate for u <= 20 (positive terms only).
inline void bessel_I01_series(double u, double& i0, double& i1) {
    const double q = 0.25 * u * u;
    double t0 = 1.0;       // (u^2/4)^k / (k!)^2
    double t1 = 0.5 * u;   // (u/2) (u^2/4)^k / (k!(k+1)!)
    i0 = t0;
    i1 = t1;
    for (int k = 1; k < 500; ++k) {
        t0 *= q / (double(k) * k);
        t1 *= q / (double(k) * (k + 1));
        i0 += t0;
        i1 += t1;
        if (t0 < 1e-17 * i0 && t1 < 1e-17 * i1) break;
    }
}

// K0, K1 by the logarithmic series; used for 0 < u <= 2.
inline K01 bessel_K01_series(double u) {
    double i0 = 0.0, i1 = 0.0;
    bessel_I01_series(u, i0, i1);
    const double q = 0.25 * u * u;
    const double lg = std::log(0.5 * u);

    // K0 = -(ln(u/2) + gamma) I0 + sum_k H_k q^k / (k!)^2
    double s0 = 0.0;
    double t = 1.0;
    double harmonic = 0.0;
    // K1 = 1/u + ln(u/2) I1 - (u/4) sum_k [psi(k+1) + psi(k+2)] q^k / (k!(k+1)!)
    double s1 = 0.0;
    double t1 = 1.0;
    for (int k = 0; k < 500; ++k) {
        if (k > 0) {
            harmonic += 1.0 / k;
            t *= q / (double(k) * k);
            t1 *= q / (double(k) * (k + 1));
        }
        const double psi1 = -kEulerGamma + harmonic;
        const double psi2 = psi1 + 1.0 / (k + 1);
        const double d0 = harmonic * t;
        const double d1 = (psi1 + psi2) * t1;
        s0 += d0;
        s1 += d1;
        if (k > 2 && std::abs(d0) < 1e-17 * std::abs(s0) && std::abs(d1) < 1e-17 * std::abs(s1)) break;
    }
    return {-(lg + kEulerGamma) * i0 + s0, 1.0 / u + lg * i1 - 0.25 * u * s1};
}

// e^u K0(u), e^u K1(u) by Steed's method on the continued fraction CF2
// (Temme's normalisation); converges quickly for u >= 2.
inline K01 bessel_K01_scaled_cf(double u) {
    double b = 2.0 * (1.0 + u);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 10000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < 1e-17) break;
    }
    h *= a1;
    const double k0 = std::sqrt(std::numbers::pi / (2.0 * u)) / s;
    const double k1 = k0 * (u + 0.5 - h) / u;
    return {k0, k1};
}

inline K01 bessel_K01_scaled(double u) {
    if (u <= 2.0) {
        const K01 k = bessel_K01_series(u);
        const double e = std::exp(u);
        return {k.k0 * e, k.k1 * e};
    }
    return bessel_K01_scaled_cf(u);
}

// Hankel expansion of e^{-u} I_n(u), n in {0, 1}; u >= 20.
inline double bessel_I_scaled_asymptotic(int n, double u) {
    const double mu = 4.0 * n * n;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -term * (mu - odd * odd) / (k * 8.0 * u);
        if (std::abs(next) >= std::abs(term)) break;  // asymptotic series turned
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * u);
}

}  // namespace detail

/// e^u K_nu(u). Never underflows for finite u > 0.
inline double bessel_K_scaled(HalfIntOrder order, double u) {
    detail::require_positive_finite(u, "bessel_K");
    const int tw = order.twice_order();
    if (!order.is_integer()) {
        // K_{1/2} e^u = sqrt(pi / 2u); K_{nu+1} = K_{nu-1} + (2 nu / u) K_nu.
        double km = std::sqrt(std::numbers::pi / (2.0 * u));  // K_{1/2}, and K_{-1/2}
        double k = km;
        double nu = 0.5;
        double prev = km;
        while (2.0 * nu < tw) {
            const double next = prev + (2.0 * nu / u) * k;
            prev = k;
            k = next;
            nu += 1.0;
        }
        return k;
    }
    const auto k01 = detail::bessel_K01_scaled(u);
    if (tw == 0) return k01.k0;
    double prev = k01.k0;
    double k = k01.k1;
    for (int n = 1; 2 * n < tw; ++n) {
        const double next = prev + (2.0 * n / u) * k;
        prev = k;
        k = next;
    }
    return k;
}

/// K_nu(u) for u > 0; returns 0 once e^{-u} underflows.
inline double bessel_K(HalfIntOrder order, double u) {
    return bessel_K_scaled(order, u) * std::exp(-u);
}

/// log K_nu(u), finite for every finite u > 0.
inline double log_bessel_K(HalfIntOrder order, double u) {
    return std::log(bessel_K_scaled(order, u)) - u;
}

/// e^{-u} I_n(u) for n in {0, 1} and u >= 0 (no overflow bound).
inline double bessel_I_scaled(int n, double u) {
    if (n != 0 && n != 1) throw std::domain_error("bessel_I: order must be 0 or 1");
    if (!std::isfinite(u) || u < 0.0) throw std::domain_error("bessel_I: argument must be >= 0 and finite");
    if (u > 20.0) return detail::bessel_I_scaled_asymptotic(n, u);
    double i0 = 0.0, i1 = 0.0;
    detail::bessel_I01_series(u, i0, i1);
    return (n == 0 ? i0 : i1) * std::exp(-u);
}

/// I_n(u) for n in {0, 1}, 0 <= u <= 700.
inline double bessel_I(int n, double u) {
    if (n != 0 && n != 1) throw std::domain_error("bessel_I: order must be 0 or 1");
    if (!std::isfinite(u) || u < 0.0) throw std::domain_error("bessel_I: argument must be >= 0 and finite");
    if (u > kBesselIOverflowBound)
        throw std::overflow_error("bessel_I: argument exceeds overflow bound " +
                                  std::to_string(kBesselIOverflowBound));
    if (u > 20.0) return detail::bessel_I_scaled_asymptotic(n, u) * std::exp(u);
    double i0 = 0.0, i1 = 0.0;
    detail::bessel_I01_series(u, i0, i1);
    return n == 0 ? i0 : i1;
}

}  // namespace martin::specfun
