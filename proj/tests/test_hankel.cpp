#include <cmath>
#include <numbers>

#include "besselcz/hankel.hpp"
#include "besselcz/quadrature.hpp"
#include "besselcz/specfun.hpp"
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

// A mixture of centred Gaussians of different widths.
TestFunction mixture(int n) {
    TestFunction f = TestFunction::gaussian(n, 1.0);
    TestFunction g = TestFunction::gaussian(n, 0.6).scaled(-0.4);
    TestFunction h = TestFunction::gaussian(n, 1.7).scaled(0.25);
    f.components.insert(f.components.end(), g.components.begin(), g.components.end());
    f.components.insert(f.components.end(), h.components.begin(), h.components.end());
    return f;
}

// Transform of exp(-y^2 / 2 s^2): s^{2 lambda + 1} exp(-s^2 x^2 / 2) per coordinate.
double mixture_transform(const TypeIndex& lam, const Vec& x) {
    auto g = [&](double s, double c) {
        double v = c;
        for (int i = 0; i < lam.n(); ++i) v *= std::pow(s, 2 * lam[i] + 1) * std::exp(-s * s * x[i] * x[i] / 2);
        return v;
    };
    return g(1.0, 1) + g(0.6, -0.4) + g(1.7, 0.25);
}

}  // namespace

TEST_CASE("kernel examples") {
    for (double x : {0.3, 1.0, 4.0})
        CHECK(phi_kernel(TypeIndex{0.5}, vec({x}), vec({2.5})) == doctest::Approx(bessel_j(0.0, 2.5 * x)).epsilon(1e-14));
    CHECK(std::abs(phi_kernel(TypeIndex{0}, vec({1}), vec({pi / 2}))) < 1e-15);
    for (double lam : {-0.45, 0.0, 1.0, 2.5}) {
        const double limit = std::pow(2.0, -lam + 0.5) / std::tgamma(lam + 0.5);
        CHECK(phi_kernel(TypeIndex{lam}, vec({1e-5}), vec({1e-5})) == doctest::Approx(limit).epsilon(1e-9));
        // continuity across the series threshold
        const double below = phi_kernel(TypeIndex{lam}, vec({1}), vec({0.999e-3}));
        const double above = phi_kernel(TypeIndex{lam}, vec({1}), vec({1.001e-3}));
        CHECK(std::abs(below - above) < 1e-6 * limit);
    }
    // product structure
    CHECK(phi_kernel(TypeIndex{0.5, -0.25}, vec({1, 2}), vec({3, 0.7})) ==
          doctest::Approx(phi_kernel(TypeIndex{0.5}, vec({1}), vec({3})) *
                          phi_kernel(TypeIndex{-0.25}, vec({2}), vec({0.7})))
              .epsilon(1e-14));
}

TEST_CASE("kernel bound") {
    const PhiBound a = phi_bound_margin(TypeIndex{0.5}, vec({1}), vec({10}));
    CHECK(a.phi == doctest::Approx(0.245936).epsilon(1e-5));
    CHECK(a.bound == doctest::Approx(std::pow(10, -0.5)).epsilon(1e-14));
    const PhiBound b = phi_bound_margin(TypeIndex{0}, vec({1e-4}), vec({1e-4}));
    CHECK(b.phi == doctest::Approx(std::sqrt(2 / pi)).epsilon(1e-8));
    CHECK(b.bound == 1.0);
    CHECK(phi_bound_margin(TypeIndex{-0.25}, vec({10}), vec({10})).bound == doctest::Approx(3.16227766).epsilon(1e-8));
    for (double lam : {-0.45, 0.0, 0.5, 2.5}) {
        double worst = 0;
        for (double z = 1e-3; z < 1e3; z *= 1.07) {
            const PhiBound p = phi_bound_margin(TypeIndex{lam}, vec({1}), vec({z}));
            worst = std::max(worst, std::abs(p.phi) / p.bound);
        }
        CHECK(worst < 2);
    }
}

TEST_CASE("Gaussian is self-reciprocal") {
    for (const TypeIndex& lam : {TypeIndex{-0.45}, TypeIndex{-0.25}, TypeIndex{0}, TypeIndex{1}, TypeIndex{2.5},
                                 TypeIndex{-0.25, 0.5}, TypeIndex{2.5, -0.45}}) {
        const TestFunction f = TestFunction::gaussian(lam.n());
        for (double x : {0.05, 0.7, 2.0, 4.5}) {
            const Vec p = Vec::Constant(lam.n(), x);
            const TransformValue v = hankel_transform(lam, f, p);
            CHECK(std::abs(v.value - std::exp(-p.squaredNorm() / 2)) < 1e-6);
            CHECK_FALSE(v.flagged);
        }
        const HankelGrid grid = make_hankel_grid(lam, 12, 0.5, 16);
        const RadialGridFunction g = sample(f, grid);
        const RadialGridFunction h = hankel_transform_grid(lam, g);
        double err = 0;
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const Vec z = grid.point(i);
            if (z.maxCoeff() > 8) continue;
            err = std::max(err, std::abs(h.values[i] - std::exp(-z.squaredNorm() / 2)));
        }
        CHECK(err < 1e-6);
        CHECK(std::abs(hankel_transform(lam, g, Vec::Constant(lam.n(), 1.3)).value - std::exp(-1.69 * lam.n() / 2)) < 1e-6);
    }
}

TEST_CASE("Gaussian mixtures") {
    for (const TypeIndex& lam : {TypeIndex{-0.25}, TypeIndex{1}, TypeIndex{0, 2.5}}) {
        const TestFunction f = mixture(lam.n());
        for (double x : {0.2, 1.1, 3.0}) {
            const Vec p = Vec::Constant(lam.n(), x);
            CHECK(std::abs(hankel_transform(lam, f, p).value - mixture_transform(lam, p)) < 1e-6);
        }
        // involution
        const HankelGrid grid = make_hankel_grid(lam, 14, 0.5, 16);
        const RadialGridFunction g = sample(f, grid);
        const RadialGridFunction back = hankel_transform_grid(lam, hankel_transform_grid(lam, g));
        double err = 0;
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            if (grid.point(i).maxCoeff() < 8) err = std::max(err, std::abs(back.values[i] - g.values[i]));
        CHECK(err < 1e-5);
    }
}

TEST_CASE("off-centre Gaussian against direct quadrature") {
    const TypeIndex lam{0.75};
    const TestFunction f = TestFunction::gaussian_at(vec({3}), 0.4);
    for (double x : {0.5, 2.0, 6.0}) {
        const QuadResult o = integrate_adaptive(
            [&](double y) {
                return phi_kernel(lam, vec({x}), vec({y})) * std::exp(-(y - 3) * (y - 3) / 0.32) * std::pow(y, 1.5);
            },
            0, 8, 1e-13);
        CHECK(std::abs(hankel_transform(lam, f, vec({x})).value - o.value) < 1e-9);
    }
}

TEST_CASE("transform of a grid function flags unresolved oscillation") {
    const TypeIndex lam{0.5};
    const HankelGrid grid = make_hankel_grid(lam, 12, 0.5, 16);
    const RadialGridFunction g = sample(TestFunction::gaussian(1), grid);
    CHECK_FALSE(hankel_transform(lam, g, vec({2})).flagged);
    CHECK(hankel_transform(lam, g, vec({500})).flagged);
}

TEST_CASE("test functions") {
    const TestFunction f = TestFunction::gaussian_at(vec({1, 2}), 0.5);
    CHECK(f(vec({1, 2})) == 1.0);
    CHECK(f(vec({1.5, 2})) == doctest::Approx(std::exp(-0.5)));
    CHECK(TestFunction::constant(2)(vec({7, 9})) == 1.0);
    CHECK(TestFunction::zero(1)(vec({3})) == 0.0);
    CHECK(f.scaled(3)(vec({1, 2})) == 3.0);
}

TEST_CASE("factor rules") {
    const Factor bump{2.0, 0.1, false};
    const GaussRule r = factor_rule(bump, -0.25, 0);
    const double v = r.apply([&](double y) { return bump(y); });
    const QuadResult o = integrate_adaptive([&](double y) { return bump(y) * std::pow(y, -0.5); }, 0, 4, 1e-14);
    CHECK(std::abs(v - o.value) < 1e-12);
}
