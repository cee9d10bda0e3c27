#include <cmath>
#include <numbers>
#include <random>

#include "besselcz/errors.hpp"
#include "besselcz/geometry.hpp"
#include "doctest.h"

using namespace besselcz;
using std::numbers::pi;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("TypeIndex") {
    const TypeIndex lam{-0.25, 1, 2.5};
    CHECK(lam.n() == 3);
    CHECK(lam.abs() == doctest::Approx(3.25));
    CHECK(lam.two_lambda_plus_one()[0] == doctest::Approx(0.5));
    CHECK_FALSE(lam.nonnegative());
    CHECK_THROWS_AS(TypeIndex({-0.5}), DomainError);
    CHECK_THROWS_AS(TypeIndex({0, std::nan("")}), DomainError);
    CHECK_THROWS_AS(TypeIndex(Vec(0)), DomainError);
}

TEST_CASE("half-space points") {
    CHECK_NOTHROW(require_half_space(vec({1, 2}), 2));
    CHECK_THROWS_AS(require_half_space(vec({1, 0}), 2), DomainError);
    CHECK_THROWS_AS(require_half_space(vec({1, 2}), 3), DomainError);
}

TEST_CASE("q_form examples") {
    CHECK(q_form(vec({1, 2}), vec({1, 2}), vec({-1, -1})) == 0.0);
    CHECK(q_form(vec({1}), vec({2}), vec({1})) == 9.0);
    CHECK(q_form(vec({1, 1}), vec({2, 3}), vec({0, 0})) == 15.0);
    CHECK(q_form_stable(vec({1, 1}), vec({2, 3}), vec({1, 1})) == 15.0);
}

TEST_CASE("q is at least |x-y|^2, with equality at s = -1") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(1e-3, 10), s(-1, 1);
    for (int i = 0; i < 20000; ++i) {
        Vec x(3), y(3), ss(3);
        for (int j = 0; j < 3; ++j) x[j] = pos(rng), y[j] = pos(rng), ss[j] = s(rng);
        const double d2 = (x - y).squaredNorm();
        CHECK(q_form(x, y, ss) >= d2 - 1e-12 * (x.squaredNorm() + y.squaredNorm()));
        CHECK(std::abs(q_form(x, y, Vec::Constant(3, -1.0)) - d2) <= 1e-12 * (x.squaredNorm() + y.squaredNorm()));
    }
}

TEST_CASE("q comparison on |x-y| > 2|x-z|") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(1e-3, 10), u(0, 2), unit(0, 1);
    long checked = 0;
    while (checked < 20000) {
        Vec x(2), y(2), z(2), uu(2);
        for (int j = 0; j < 2; ++j) x[j] = pos(rng), y[j] = pos(rng), uu[j] = u(rng);
        Vec d(2);
        d << unit(rng) - 0.5, unit(rng) - 0.5;
        z = x + d.normalized() * (x - y).norm() * 0.5 * unit(rng);
        if ((z.array() <= 0).any() || !((x - y).norm() > 2 * (x - z).norm())) continue;
        ++checked;
        const double qx = q_form_stable(x, y, uu), qz = q_form_stable(z, y, uu);
        CHECK(qz >= qx / 4 * (1 - 1e-12));
        CHECK(qz <= 4 * qx * (1 + 1e-12));
    }
}

TEST_CASE("v_lambda examples") {
    CHECK(v_lambda(TypeIndex{0.5}, vec({1}), 2) == doctest::Approx(6).epsilon(1e-15));
    CHECK(v_lambda(TypeIndex{0}, vec({3.7}), 0.3) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(v_lambda(TypeIndex{-0.25, 1}, vec({1, 1}), 1) == doctest::Approx(2.828427).epsilon(1e-6));
    CHECK(std::exp(log_v_lambda(TypeIndex{-0.25, 1}, vec({1, 1}), 1)) == doctest::Approx(std::pow(2, 1.5)));
}

TEST_CASE("join_max") {
    CHECK(join_max(vec({1, 3}), vec({2, 1})) == vec({2, 3}));
    CHECK(join_max(vec({4, 5}), vec({4, 5})) == vec({4, 5}));
    CHECK(join_max(vec({1}), vec({2})) == vec({2}));
}

TEST_CASE("exact one-dimensional ball measures") {
    const BallMeasure a = mu_ball(TypeIndex{0}, vec({5}), 1);
    CHECK(a.exact);
    CHECK(a.value == doctest::Approx(2).epsilon(1e-14));
    CHECK(mu_ball(TypeIndex{0.5}, vec({2}), 1).value == doctest::Approx(4).epsilon(1e-14));
    CHECK(mu_ball(TypeIndex{-0.25}, vec({0.5}), 0.5).value == doctest::Approx(2).epsilon(1e-14));
}

TEST_CASE("QMC ball measures in two dimensions") {
    // A disc away from the boundary: pi R^2 and int x_1 = pi R^2 x_1.
    const BallMeasure a = mu_ball(TypeIndex{0, 0}, vec({5, 5}), 1, 1 << 16);
    CHECK_FALSE(a.exact);
    CHECK(std::abs(a.value - pi) < 5 * a.error + 1e-3);
    CHECK(std::abs(a.value - pi) < 1e-2);
    const BallMeasure b = mu_ball(TypeIndex{0.5, 0}, vec({5, 5}), 1, 1 << 16);
    CHECK(std::abs(b.value - 5 * pi) < 5e-2);
    // A quarter disc clipped by both axes.
    const BallMeasure c = mu_ball(TypeIndex{0, 0}, vec({1e-9, 1e-9}), 2, 1 << 16);
    CHECK(std::abs(c.value - pi) < 1e-2);
    // Deterministic in the seed.
    CHECK(mu_ball(TypeIndex{1, -0.25}, vec({0.3, 2}), 1.5, 4096, 3).value ==
          mu_ball(TypeIndex{1, -0.25}, vec({0.3, 2}), 1.5, 4096, 3).value);
}

TEST_CASE("ball comparability ratio stays bounded over radii") {
    for (const TypeIndex& lam : {TypeIndex{-0.45}, TypeIndex{0.0}, TypeIndex{2.5}}) {
        double lo = 1e300, hi = 0;
        for (double x : {1e-3, 0.1, 1.0, 10.0, 100.0})
            for (double R = 1e-3 * x; R <= 1e3 * x; R *= 3) {
                const double r = mu_ball(lam, vec({x}), R).value / v_lambda(lam, vec({x}), R);
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        CHECK(lo > 0);
        CHECK(hi / lo < 100);
    }
}

TEST_CASE("low-discrepancy helpers") {
    CHECK(radical_inverse(1, 2) == 0.5);
    CHECK(radical_inverse(3, 2) == 0.75);
    CHECK(radical_inverse(1, 3) == doctest::Approx(1.0 / 3));
    CHECK(nth_prime(0) == 2);
    CHECK(nth_prime(4) == 11);
}
