// Bessel functions of real order and non-negative real argument.
//
// Everything here is templated on the scalar type so the same code runs in
// double for production and in long double for the finite-difference oracle.

#ifndef BESSELCZ_SPECFUN_HPP
#define BESSELCZ_SPECFUN_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "besselcz/errors.hpp"

namespace besselcz {

namespace detail {

template <class T>
constexpr T pi_v = std::numbers::pi_v<T>;

// Below this argument the scaled modified Bessel function is summed from its
// power series, above it from the large-argument expansion. At the switch the
// first expansion ratio 4nu^2/(8z) is at most 1/2.
template <class T>
T i_series_limit(T nu) {
    return std::max(T(40), nu * nu);
}

// z^{-nu} e^{-z} I_nu(z) by the ascending series. All terms are positive.
template <class T>
T bessel_i_reduced_series(T nu, T z) {
    const T eps = std::numeric_limits<T>::epsilon();
    const T quarter_z2 = z * z / 4;
    T log_scale = -z - nu * std::log(T(2)) - std::lgamma(nu + 1);
    T term = 1;
    T sum = 1;
    for (int k = 0; k < 100000; ++k) {
        term *= quarter_z2 / (T(k + 1) * (nu + k + 1));
        sum += term;
        if (term < eps * sum && T(k) > z) break;
        if (sum > T(1e250)) {
            sum *= T(1e-250);
            term *= T(1e-250);
            log_scale += T(250) * std::log(T(10));
        }
    }
    return sum * std::exp(log_scale);
}

// e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(nu) z^{-k}.
template <class T>
T bessel_i_scaled_asymptotic(T nu, T z) {
    const T eps = std::numeric_limits<T>::epsilon();
    const T mu = 4 * nu * nu;
    T term = 1;
    T sum = 1;
    T prev = std::numeric_limits<T>::infinity();
    for (int k = 1; k < 200; ++k) {
        term *= -(mu - T(2 * k - 1) * T(2 * k - 1)) / (T(8 * k) * z);
        const T mag = std::abs(term);
        if (mag == 0) break;
        if (mag > prev) break;  // divergent tail: stop at the smallest term
        sum += term;
        prev = mag;
        if (mag < eps * std::abs(sum)) break;
    }
    return sum / std::sqrt(2 * pi_v<T> * z);
}

// Hankel large-argument expansion of J_nu.
template <class T>
T bessel_j_asymptotic(T nu, T z) {
    const T eps = std::numeric_limits<T>::epsilon();
    const T mu = 4 * nu * nu;
    T p = 1, q = 0;
    T term = 1;
    T prev = std::numeric_limits<T>::infinity();
    for (int k = 1; k < 200; ++k) {
        term *= (mu - T(2 * k - 1) * T(2 * k - 1)) / (T(8 * k) * z);
        const T mag = std::abs(term);
        if (mag == 0) break;
        if (mag > prev) break;
        prev = mag;
        // a_k / z^k enters P with sign (-1)^{k/2} for even k, Q with (-1)^{(k-1)/2} for odd k.
        switch (k % 4) {
            case 1: q += term; break;
            case 2: p -= term; break;
            case 3: q -= term; break;
            default: p += term; break;
        }
        if (mag < eps) break;
    }
    const T chi = z - (nu / 2 + T(0.25)) * pi_v<T>;
    return std::sqrt(2 / (pi_v<T> * z)) * (p * std::cos(chi) - q * std::sin(chi));
}

// z^{-nu} J_nu(z) by the ascending series; accurate for moderate z.
template <class T>
T bessel_j_reduced_series(T nu, T z) {
    const T eps = std::numeric_limits<T>::epsilon();
    const T quarter_z2 = z * z / 4;
    T term = 1;
    T sum = 1;
    T largest = 1;
    for (int k = 0; k < 10000; ++k) {
        term *= -quarter_z2 / (T(k + 1) * (nu + k + 1));
        sum += term;
        largest = std::max(largest, std::abs(term));
        if (std::abs(term) < eps * eps * largest || (std::abs(term) < eps * std::abs(sum) && T(k) > z))
            break;
    }
    return sum * std::exp(-nu * std::log(T(2)) - std::lgamma(nu + 1));
}

// J_nu(z) by Miller's backward recurrence, normalised with
// (z/2)^mu = sum_k c_k J_{mu+2k}(z), c_0 = Gamma(mu+1), c_k = (mu+2k) Gamma(mu+k)/k!.
template <class T>
T bessel_j_miller(T nu, T z) {
    const T base = nu < 0 ? nu : nu - std::floor(nu);
    const int target = static_cast<int>(std::lround(nu - base));
    int top = std::max(target, static_cast<int>(z)) + 40 + static_cast<int>(std::sqrt(40 * z));
    if (top % 2) ++top;

    const T rescale = T(1e-250);
    T next = 0;      // J_{base+k+1}
    T current = 1e-30; // J_{base+k}
    T at_target = 0;
    T norm = 0;

    // Coefficient c_k for even index 2k is generated downward from a log form.
    auto coefficient = [&](int k) -> T {
        if (k == 0) return std::exp(std::lgamma(base + 1));
        return (base + 2 * k) * std::exp(std::lgamma(base + k) - std::lgamma(T(k + 1)));
    };

    for (int k = top; k >= 0; --k) {
        if (k == target) at_target = current;
        if (k % 2 == 0) norm += coefficient(k / 2) * current;
        if (k == 0) break;
        const T prev = T(2) * (base + k) / z * current - next;
        next = current;
        current = prev;
        if (std::abs(current) > T(1e250)) {
            current *= rescale;
            next *= rescale;
            at_target *= rescale;
            norm *= rescale;
        }
    }
    return at_target * std::pow(z / 2, base) / norm;
}

}  // namespace detail

/// log Gamma(x) for x > 0.
template <class T>
T log_gamma(T x) {
    if (!(x > 0)) throw DomainError("log_gamma: argument must be positive, got " + std::to_string(double(x)));
    return std::lgamma(x);
}

/// z^{-nu} e^{-z} I_nu(z), finite at z = 0 where it equals 2^{-nu}/Gamma(nu+1).
/// Accepts nu > -1: the heat kernel needs orders lambda - 1/2 down to -1.
template <class T>
T bessel_i_scaled_reduced(T nu, T z) {
    if (!(nu > T(-1))) throw DomainError("bessel_i_reduced: order must be > -1");
    if (!(z >= 0)) throw DomainError("bessel_i: argument must be >= 0");
    if (z <= detail::i_series_limit(nu)) return detail::bessel_i_reduced_series(nu, z);
    return detail::bessel_i_scaled_asymptotic(nu, z) * std::exp(-nu * std::log(z));
}

/// e^{-z} I_nu(z) for nu >= -1/2, z >= 0 (z > 0 when nu < 0).
template <class T>
T bessel_i_scaled(T nu, T z) {
    if (!(nu >= T(-0.5))) throw DomainError("bessel_i: order must be >= -1/2");
    if (!(z >= 0)) throw DomainError("bessel_i: argument must be >= 0");
    if (z == 0) {
        if (nu < 0) throw DomainError("bessel_i: I_nu(0) diverges for nu < 0");
        return nu == 0 ? T(1) : T(0);
    }
    if (z <= detail::i_series_limit(nu)) return detail::bessel_i_reduced_series(nu, z) * std::pow(z, nu);
    return detail::bessel_i_scaled_asymptotic(nu, z);
}

/// z^{-nu} J_nu(z) for nu > -1; the removable singularity at z = 0 is handled.
template <class T>
T bessel_j_reduced(T nu, T z) {
    if (!(nu > -1)) throw DomainError("bessel_j: order must be > -1");
    if (!(z >= 0)) throw DomainError("bessel_j: argument must be >= 0");
    if (z <= 8) return detail::bessel_j_reduced_series(nu, z);
    return std::pow(z, -nu) * (z >= std::max(T(25), nu * nu) ? detail::bessel_j_asymptotic(nu, z)
                                                                : detail::bessel_j_miller(nu, z));
}

/// J_nu(z) for nu > -1, z >= 0.
template <class T>
T bessel_j(T nu, T z) {
    if (!(nu > -1)) throw DomainError("bessel_j: order must be > -1");
    if (!(z >= 0)) throw DomainError("bessel_j: argument must be >= 0");
    if (z == 0) {
        if (nu == 0) return 1;
        return nu > 0 ? T(0) : std::numeric_limits<T>::infinity();
    }
    if (z <= 8) return detail::bessel_j_reduced_series(nu, z) * std::pow(z, nu);
    if (z >= std::max(T(25), nu * nu)) return detail::bessel_j_asymptotic(nu, z);
    return detail::bessel_j_miller(nu, z);
}

}  // namespace besselcz

#endif  // BESSELCZ_SPECFUN_HPP
