#include "besselcz/geometry.hpp"

#include <array>
#include <random>

namespace besselcz {

void require_half_space(const Vec& x, int n, const char* name) {
    if (x.size() != n)
        throw DomainError(std::string(name) + " has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(n));
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] > 0) || !std::isfinite(x[i]))
            throw DomainError(std::string(name) + " must lie in the open half-space (all coordinates > 0)");
}

int nth_prime(int index) {
    static constexpr std::array<int, 32> primes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,  37,  41,  43,  47,  53,
                                                   59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
    if (index < 0 || index >= static_cast<int>(primes.size())) throw DomainError("nth_prime: index out of range");
    return primes[index];
}

double radical_inverse(std::uint64_t i, int base) {
    const double inv = 1.0 / base;
    double f = inv, r = 0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

namespace {

// mu-mass of [a,b] for the weight x^{p-1}, computed without cancellation.
double segment_mass(double a, double b, double p) {
    if (a <= 0) return std::pow(b, p) / p;
    return std::pow(a, p) * std::expm1(p * std::log(b / a)) / p;
}

// Inverse of the normalised CDF of x^{p-1} on [a,b].
double segment_quantile(double a, double b, double p, double u) {
    if (a <= 0) return b * std::pow(u, 1 / p);
    const double e = std::expm1(p * std::log(b / a));
    return a * std::exp(std::log1p(u * e) / p);
}

double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

BallMeasure mu_ball(const TypeIndex& lam, const Vec& x, double R, int budget, std::uint64_t seed) {
    const int n = lam.n();
    require_half_space(x, n, "x");
    if (!(R > 0)) throw DomainError("mu_ball: radius must be positive");
    const Vec p = lam.two_lambda_plus_one();
    BallMeasure out;

    Vec lo(n), hi(n);
    double box = 1;
    for (int i = 0; i < n; ++i) {
        lo[i] = std::max(x[i] - R, 0.0);
        hi[i] = x[i] + R;
        box *= segment_mass(lo[i], hi[i], p[i]);
    }
    if (n == 1) {
        out.value = box;
        out.exact = true;
        return out;
    }

    constexpr int replicates = 8;
    const int per = std::max(16, budget / replicates);
    std::mt19937_64 rng(seed);
    std::array<double, replicates> estimates{};
    Vec shift(n), z(n);
    const double r2 = R * R;
    for (int rep = 0; rep < replicates; ++rep) {
        for (int i = 0; i < n; ++i) shift[i] = unit_double(rng);
        long inside = 0;
        for (int k = 1; k <= per; ++k) {
            double d2 = 0;
            for (int i = 0; i < n; ++i) {
                double u = radical_inverse(static_cast<std::uint64_t>(k), nth_prime(i)) + shift[i];
                if (u >= 1) u -= 1;
                z[i] = segment_quantile(lo[i], hi[i], p[i], u);
                d2 += (z[i] - x[i]) * (z[i] - x[i]);
            }
            if (d2 <= r2) ++inside;
        }
        estimates[rep] = box * static_cast<double>(inside) / per;
    }
    double mean = 0;
    for (double e : estimates) mean += e;
    mean /= replicates;
    double var = 0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= replicates - 1;
    out.value = mean;
    out.error = std::sqrt(var / replicates);
    out.flagged = out.error > 0.01 * out.value;
    return out;
}

}  // namespace besselcz
