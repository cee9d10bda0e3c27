#include <cmath>
#include <numbers>
#include <vector>

#include "besselcz/errors.hpp"
#include "besselcz/quadrature.hpp"
#include "doctest.h"

using namespace besselcz;
using std::numbers::pi;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double mass_formula(double eta) { return 1 / (std::pow(2.0, eta - 0.5) * std::tgamma(eta + 0.5)); }

}  // namespace

TEST_CASE("atomic rule at eta = 0") {
    const GegenbauerRule r = gegenbauer_rule(0, 12);
    REQUIRE(r.is_atomic);
    REQUIRE(r.nodes.size() == 2);
    CHECK(r.nodes[0] == -1.0);
    CHECK(r.nodes[1] == 1.0);
    CHECK(r.weights[0] == doctest::Approx(0.398942).epsilon(1e-6));
    CHECK(r.weights[1] == doctest::Approx(1 / std::sqrt(2 * pi)).epsilon(1e-15));
}

TEST_CASE("Omega masses") {
    CHECK(gegenbauer_rule(1, 8).weights.sum() == doctest::Approx(0.797885).epsilon(1e-6));
    CHECK(rel(gegenbauer_rule(0.5, 64).weights.sum(), 1.0) < 1e-12);
    for (double eta : {0.0, 0.1, 0.5, 1.0, 2.6}) {
        const GegenbauerRule r = gegenbauer_rule(eta, 20);
        CHECK(rel(r.weights.sum(), mass_formula(eta)) < 1e-12);
        CHECK(rel(omega_mass(eta), mass_formula(eta)) < 1e-13);
    }
    // continuity of the mass into the atomic limit
    CHECK(rel(omega_mass(1e-9), 2 / std::sqrt(2 * pi)) < 1e-8);
}

TEST_CASE("Gauss exactness on even moments") {
    for (double eta : {0.1, 0.5, 1.0, 2.6, 7.0}) {
        const int N = 10;
        const GegenbauerRule r = gegenbauer_rule(eta, N);
        for (int k = 0; k <= N - 1; ++k) {
            double sum = 0;
            for (Eigen::Index i = 0; i < r.nodes.size(); ++i) sum += r.weights[i] * std::pow(r.nodes[i], 2 * k);
            const double exact = std::exp(std::lgamma(k + 0.5) + std::lgamma(eta) - std::lgamma(k + eta + 0.5)) /
                                 omega_normalizer(eta);
            CHECK(rel(sum, exact) < 1e-13);
        }
    }
}

TEST_CASE("rules are symmetric with increasing nodes and positive weights") {
    for (double eta : {0.05, 0.5, 3.0}) {
        const GegenbauerRule r = gegenbauer_rule(eta, 15);
        const Eigen::Index n = r.nodes.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            CHECK(r.weights[i] > 0);
            CHECK(std::abs(r.nodes[i] + r.nodes[n - 1 - i]) < 1e-14);
            CHECK(std::abs(r.weights[i] - r.weights[n - 1 - i]) < 1e-14 * r.weights.maxCoeff());
            if (i) CHECK(r.nodes[i] > r.nodes[i - 1]);
        }
    }
}

TEST_CASE("Jacobi and Legendre rules") {
    const GaussRule l = legendre_rule(7);
    CHECK(std::abs(l.apply([](double x) { return std::pow(x, 12); }) - 2.0 / 13) < 1e-14);
    // int (1-x)^{1/2} (1+x)^{-1/2} dx = pi
    const GaussRule j = jacobi_rule(0.5, -0.5, 9);
    CHECK(rel(j.apply([](double) { return 1.0; }), pi) < 1e-13);
}

TEST_CASE("time grid") {
    const LogTimeGrid g = time_grid(1e-4, 1e4, 128);
    double s = 0;
    for (Eigen::Index i = 0; i < g.nodes.size(); ++i) s += g.weights[i] / g.nodes[i];
    CHECK(std::abs(s - std::log(1e8)) < 1e-10);
    CHECK(s == doctest::Approx(18.42068).epsilon(1e-6));
    auto integrate = [](const LogTimeGrid& grid, auto f) {
        double v = 0;
        for (Eigen::Index i = 0; i < grid.nodes.size(); ++i) v += grid.weights[i] * f(grid.nodes[i]);
        return v;
    };
    CHECK(std::abs(integrate(time_grid(1e-6, 50, 256), [](double t) { return std::exp(-t); }) - (std::exp(-1e-6) - std::exp(-50.0))) < 1e-8);
    CHECK(std::abs(integrate(time_grid(1e-6, 60, 256), [](double t) { return t * std::exp(-t); }) - 1) < 1e-8);
    CHECK_THROWS_AS(time_grid(1, 0.5, 10), DomainError);
    CHECK_THROWS_AS(time_grid(0, 1, 10), DomainError);
    CHECK_THROWS_AS(time_grid(1, 2, 1), DomainError);
}

TEST_CASE("adaptive integration") {
    const QuadResult a = integrate_adaptive([](double x) { return std::cos(x); }, 0, pi / 2, 1e-12);
    CHECK(a.converged);
    CHECK(std::abs(a.value - 1) < 1e-12);

    const QuadResult b = integrate_adaptive([](double t) { return std::exp(-t) / std::sqrt(t); }, 0,
                                            std::numeric_limits<double>::infinity(), 1e-11, {-0.5, 0});
    CHECK(b.converged);
    CHECK(std::abs(b.value - std::sqrt(pi)) < 1e-9);

    // B(1/2, 0.6)
    const QuadResult c =
        integrate_adaptive([](double s) { return std::pow(1 - s * s, -0.4); }, -1, 1, 1e-11, {-0.4, -0.4});
    CHECK(c.converged);
    CHECK(std::abs(c.value - 2.7745019184840558) < 1e-9);
}

TEST_CASE("adaptive integration flags an exhausted budget") {
    const QuadResult r = integrate_adaptive([](double x) { return std::sin(1 / x) / x; }, 1e-8, 1, 1e-14, {}, 5);
    CHECK_FALSE(r.converged);
}

TEST_CASE("line integral with analytic tails") {
    // int exp(v - e^v) dv = Gamma(1)
    const LineResult r = integrate_line([](double v) { return std::exp(v - std::exp(v)); }, -12, 3, 1e-10);
    CHECK(r.converged);
    CHECK(std::abs(r.value - 1) < 1e-8);
}

TEST_CASE("composite rule and tail rate") {
    const GaussRule r = composite_rule(0, 10, 1, 8);
    CHECK(std::abs(r.apply([](double v) { return std::exp(-v); }) - (1 - std::exp(-10.0))) < 1e-14);
    CHECK(std::abs(tail_rate(std::exp(-3.0 * 1.5), std::exp(-3.0 * 2), 0.5) - 3) < 1e-12);
}

TEST_CASE("feature rule resolves a narrow bump") {
    const std::vector<Feature> f{{3, 0.1}};
    const GaussRule r = feature_rule(f, 10, 1.5);
    const double v = r.apply([](double y) { return std::exp(-(y - 3) * (y - 3) / 0.02); });
    CHECK(rel(v, 1.3030250723923331673) < 1e-10);
}

TEST_CASE("Omega rules for exponential and graded integrands") {
    for (double eta : {0.05, 1.0, 3.5})
        for (double rate : {0.0, 0.3, 40.0, 1e4}) {
            const OmegaRule r = omega_exp_rule(eta, 32, rate, 2);
            double v = 0;
            for (Eigen::Index i = 0; i < r.u.size(); ++i) v += r.weights[i] * (1 + r.u[i] * r.u[i]) * std::exp(-rate * r.u[i]);
            // Both halves as integrals from their singular endpoint, so that
            // 2 - u is never formed by cancellation.
            const double e = std::min(0.0, eta - 1);
            auto g = [&](double u, double w) {
                return (1 + u * u) * std::exp(-rate * u) * std::pow(u * w, eta - 1) / omega_normalizer(eta);
            };
            const double tol = 1e-15 * std::max(1e-300, std::abs(v));
            const double o = integrate_adaptive([&](double u) { return g(u, 2 - u); }, 0, 1, tol, {e, 0}).value +
                             integrate_adaptive([&](double w) { return g(2 - w, w); }, 0, 1, tol, {e, 0}).value;
            CHECK(rel(v, o) < 1e-10);
        }
    for (double delta : {1e-6, 1e-2}) {
        const OmegaRule r = omega_graded_rule(1.5, 20, delta);
        double v = 0;
        for (Eigen::Index i = 0; i < r.u.size(); ++i) v += r.weights[i] * std::pow(delta + r.u[i], -2.5);
        const QuadResult o = integrate_adaptive(
            [&](double u) { return std::pow(delta + u, -2.5) * std::sqrt(u * (2 - u)) / omega_normalizer(1.5); }, 0, 2,
            1e-12 * v);
        CHECK(rel(v, o.value) < 1e-8);
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(gegenbauer_rule(-0.1, 4), DomainError);
    CHECK_THROWS_AS(gegenbauer_rule(1, 0), DomainError);
}
