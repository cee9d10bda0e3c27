#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "besselcz/errors.hpp"
#include "besselcz/hankel.hpp"
#include "besselcz/heat_kernel.hpp"
#include "besselcz/operators.hpp"
#include "besselcz/quadrature.hpp"
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

MultiIndex ivec(std::initializer_list<int> v) {
    MultiIndex out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (int x : v) out[i++] = x;
    return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double neumann(double t, double x, double y) {
    return (std::exp(-(x - y) * (x - y) / (4 * t)) + std::exp(-(x + y) * (x + y) / (4 * t))) / std::sqrt(4 * pi * t);
}

}  // namespace

TEST_CASE("heat semigroup on test functions") {
    for (const TypeIndex& lam : {TypeIndex{-0.25}, TypeIndex{0.5}, TypeIndex{2.5, -0.45}}) {
        const Vec x = Vec::Constant(lam.n(), 0.8);
        CHECK(std::abs(heat_apply(lam, 0.7, TestFunction::constant(lam.n()), x).value - 1) < 1e-5);
        // Gaussian: W_t e^{-|y|^2/2} = prod (1+2t)^{-lambda_i-1/2} e^{-x_i^2 / 2(1+2t)}
        const double t = 0.4;
        double expected = 1;
        for (int i = 0; i < lam.n(); ++i)
            expected *= std::pow(1 + 2 * t, -lam[i] - 0.5) * std::exp(-x[i] * x[i] / (2 * (1 + 2 * t)));
        CHECK(std::abs(heat_apply(lam, t, TestFunction::gaussian(lam.n()), x).value - expected) < 1e-8);
        // approximate identity
        const TestFunction f = TestFunction::gaussian_at(Vec::Constant(lam.n(), 1.0), 0.7);
        CHECK(std::abs(heat_apply(lam, 1e-7, f, x).value - f(x)) < 1e-4);
    }
}

TEST_CASE("heat semigroup on a grid and by the spectral route") {
    const TypeIndex lam{-0.25};
    const HankelGrid grid = make_hankel_grid(lam, 14, 0.5, 16);
    const TestFunction f = TestFunction::gaussian_at(vec({1.5}), 0.8);
    const RadialGridFunction g = sample(f, grid);
    const double t = 0.3;
    for (double x : {0.4, 1.5, 3.0}) {
        const double direct = heat_apply(lam, t, f, vec({x})).value;
        CHECK(std::abs(heat_apply(lam, t, g, vec({x})).value - direct) < 1e-6);
        const std::complex<double> spectral =
            multiplier_apply_spectral(lam, [t](double z) { return std::exp(-t * z * z); }, g, vec({x}));
        CHECK(std::abs(spectral.real() - direct) < 1e-5);
    }
    // M = 1 reproduces a centred Gaussian mixture
    TestFunction mix = TestFunction::gaussian(1, 0.8);
    mix.components.push_back({-0.3, {Factor{0, 1.6, false}}});
    const RadialGridFunction gm = sample(mix, grid);
    for (double x : {0.4, 1.5, 3.0})
        CHECK(std::abs(multiplier_apply_spectral(lam, [](double) { return 1.0; }, gm, vec({x})).real() -
                       mix(vec({x}))) < 1e-5);
}

TEST_CASE("diagonalisation: transform of W_t f is e^{-t|z|^2} times the transform of f") {
    const TypeIndex lam{-0.25};
    const double t = 0.2;
    const HankelGrid grid = make_hankel_grid(lam, 12, 0.5, 16);
    const TestFunction f = TestFunction::gaussian(1, 0.9);
    const RadialGridFunction wf =
        sample([&](const Vec& y) { return heat_apply(lam, t, f, y).value; }, grid);
    const RadialGridFunction lhs = hankel_transform_grid(lam, wf);
    const RadialGridFunction hf = hankel_transform_grid(lam, sample(f, grid));
    double err = 0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vec z = grid.point(i);
        if (z.maxCoeff() > 7) continue;
        err = std::max(err, std::abs(lhs.values[i] - std::exp(-t * z.squaredNorm()) * hf.values[i]));
    }
    CHECK(err < 1e-5);
}

TEST_CASE("maximal profile") {
    const TypeIndex lam{0};
    const Vec x = vec({1}), y = vec({2});
    const TimeProfile p = maximal_profile(lam, x, y, default_time_grid(x, y));
    double best = 0;
    for (double v = std::log(1e-3); v < std::log(1e3); v += 1e-5) best = std::max(best, neumann(std::exp(v), 1, 2));
    CHECK(rel(p.sup_norm(), best) < 1e-4);
    CHECK(p.peak_bracketed);
    // the t^{-1/2} tail makes the endpoint ratio fall with the grid's upper end
    const double r6 = p.endpoint_ratio();
    const double r12 = maximal_profile(lam, x, y, time_grid(1e-6, 1e12, 512)).endpoint_ratio();
    CHECK(r6 < 3e-3);
    CHECK(rel(r12, r6 * 1e-3) < 1e-2);
    CHECK(p.sup_norm() >= kernel_product(lam, 0.7, x, y));
    // homogeneity W_{c^2 t}(cx, cy) c^{n + 2|lambda|} = W_t(x, y)
    const TypeIndex l2{-0.25, 1};
    const Vec a = vec({0.4, 1.3}), b = vec({1.1, 0.2});
    for (double c : {0.1, 3.0})
        for (double t : {0.01, 0.5, 20.0})
            CHECK(rel(kernel_extended(l2, c * c * t, c * a, c * b) * std::pow(c, 2 + 2 * l2.abs()),
                      kernel_extended(l2, t, a, b)) < 1e-10);
}

TEST_CASE("g kernel profiles") {
    const TypeIndex lam{0};
    const Vec x = vec({1}), y = vec({2});
    const LogTimeGrid grid = default_time_grid(x, y, 256);
    const TimeProfile p = g_kernel_profile(lam, ivec({0}), 1, x, y, grid);
    CHECK(p.weight_exponent == 2);
    for (Eigen::Index j = 0; j < grid.nodes.size(); j += 17) {
        const double t = grid.nodes[j], h = 1e-5 * t;
        const double dt = (neumann(t + h, 1, 2) - neumann(t - h, 1, 2)) / (2 * h);
        CHECK(std::abs(p.values[j] - dt) < 1e-7 * std::abs(p.sup_norm()));
    }
    CHECK(p.lp_norm(2) > 0);
    // decay of the norm along a ray (empirical)
    const TypeIndex l2{0.5, -0.25};
    const Vec x2 = vec({1, 1});
    double prev = std::numeric_limits<double>::infinity();
    for (double r = 0.2; r < 20; r *= 1.6) {
        const Vec y2 = x2 + r * vec({0.6, 0.8});
        const double norm = g_kernel_profile(l2, ivec({1, 0}), 1, x2, y2, default_time_grid(x2, y2)).lp_norm(2);
        CHECK(norm < prev);
        prev = norm;
    }
}

TEST_CASE("g function") {
    const TypeIndex lam{0.5};
    const TestFunction f = TestFunction::gaussian(1, 1.0);
    const OpValue a = g_apply(lam, ivec({0}), 1, f, vec({0.8}));
    CHECK(a.value > 0);
    CHECK(rel(g_apply(lam, ivec({0}), 1, f.scaled(-3), vec({0.8})).value, 3 * a.value) < 1e-10);
    CHECK(g_apply(lam, ivec({1}), 0, TestFunction::zero(1), vec({0.8})).value == 0.0);
    for (double l : {-0.25, 1.0}) {
        const OpValue r = g_norm_ratio(TypeIndex{l}, 0, 1, TestFunction::gaussian(1, 0.8));
        CHECK(std::abs(r.value - 0.5) < 1e-4);
    }
}

TEST_CASE("Laplace multipliers") {
    const TypeIndex lam{-0.25, 1};
    const Vec x = vec({0.5, 1.0}), y = vec({1.4, 0.3});
    CHECK(std::abs(laplace_mult_kernel(lam, LaplaceSymbol::constant(1), x, y).value) < 1e-8);
    CHECK(laplace_mult_kernel(lam, LaplaceSymbol::constant(0), x, y).value == 0.0);
    // two routes for <T f, g> with M(z) = z^2 / (1 + z^2)
    const TypeIndex l1{0.5};
    const TestFunction f = TestFunction::gaussian_at(vec({1.0}), 0.15), g = TestFunction::gaussian_at(vec({3.0}), 0.15);
    const double spectral =
        multiplier_matrix_element_spectral(l1, [](double z) { return z * z / (1 + z * z); }, f, g);
    const double kernel = laplace_matrix_element_kernel(l1, LaplaceSymbol::exponential(1), f, g);
    CHECK(std::abs(spectral - kernel) < 1e-4 * std::abs(kernel));
    // gradient against differences of the kernel
    const LaplaceSymbol psi = LaplaceSymbol::exponential(1);
    const Vec grad = laplace_mult_gradient(lam, psi, x, y);
    const double h = 1e-5;
    const Vec e = vec({h, 0});
    const double d = (laplace_mult_kernel(lam, psi, x + e, y).value - laplace_mult_kernel(lam, psi, x - e, y).value) /
                     (2 * h);
    CHECK(std::abs(grad[0] - d) < 1e-6 * grad.norm());
}

TEST_CASE("Laplace-Stieltjes multipliers") {
    const TypeIndex lam{0.5};
    const Vec x = vec({1}), y = vec({2});
    StieltjesMeasure single{{{1.3, {1, 0}}}};
    CHECK(std::abs(stieltjes_mult_kernel(lam, single, x, y) - kernel_product(lam, 1.3, x, y)) < 1e-12);
    StieltjesMeasure two{{{1.0, {1, 0}}, {2.0, {-1, 0}}}};
    CHECK(std::abs(stieltjes_mult_kernel(lam, two, x, y) -
                   (kernel_product(lam, 1.0, x, y) - kernel_product(lam, 2.0, x, y))) < 1e-12);
    StieltjesMeasure mixed{{{0.5, {1, 0}}, {2.0, {-0.5, 0.5}}}};
    CHECK(mixed.total_variation() == doctest::Approx(1 + std::sqrt(0.5)));
    const double sup = maximal_profile(lam, x, y, default_time_grid(x, y)).sup_norm();
    CHECK(std::abs(stieltjes_mult_kernel(lam, mixed, x, y)) <= mixed.total_variation() * sup);
    const Eigen::VectorXcd grad = stieltjes_mult_gradient(lam, mixed, x, y);
    CHECK(grad.size() == 2);
}

TEST_CASE("Riesz kernels by two routes") {
    // lambda = 0, m = 1: -(1/pi) (1/(x-y) + 1/(x+y))
    for (auto [x, y] : {std::pair{1.0, 2.0}, {3.0, 0.4}, {0.05, 0.06}}) {
        const double exact = -(1 / (x - y) + 1 / (x + y)) / pi;
        CHECK(rel(riesz_kernel_time(TypeIndex{0}, ivec({1}), vec({x}), vec({y})).value, exact) < 1e-8);
        CHECK(rel(riesz_kernel_closed(TypeIndex{0}, ivec({1}), vec({x}), vec({y})).value, exact) < 1e-8);
    }
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lu(std::log(0.1), std::log(10.0));
    const double comps[] = {-0.45, -0.25, 0, 0.5, 1, 2.5};
    const MultiIndex patterns[] = {ivec({1, 0}), ivec({0, 1}), ivec({2, 0}), ivec({1, 1})};
    for (int i = 0; i < 40; ++i) {
        const TypeIndex lam{comps[i % 6], comps[(i / 6) % 6]};
        const Vec x = vec({std::exp(lu(rng)), std::exp(lu(rng))}), y = vec({std::exp(lu(rng)), std::exp(lu(rng))});
        const MultiIndex m = patterns[i % 4];
        const OpValue a = riesz_kernel_time(lam, m, x, y), b = riesz_kernel_closed(lam, m, x, y);
        CHECK(std::abs(a.value - b.value) <= 1e-6 * std::max(std::abs(b.value), 1e-4 * b.magnitude));
    }
    // homogeneity of degree -n - 2|lambda|
    const TypeIndex lam{-0.25, 1};
    const Vec x = vec({0.7, 1.2}), y = vec({1.5, 0.4});
    const double c = 2.5;
    CHECK(rel(riesz_kernel_closed(lam, ivec({1, 1}), c * x, c * y).value * std::pow(c, 2 + 2 * lam.abs()),
              riesz_kernel_closed(lam, ivec({1, 1}), x, y).value) < 1e-10);
    CHECK_THROWS_AS(riesz_kernel_time(lam, ivec({0, 0}), x, y), DomainError);
}

TEST_CASE("Poisson kernel") {
    for (auto [t, x, y] : {std::tuple{1.0, 1.0, 2.0}, {0.1, 0.5, 0.55}, {5.0, 3.0, 0.2}}) {
        const double exact = t / pi * (1 / ((x - y) * (x - y) + t * t) + 1 / ((x + y) * (x + y) + t * t));
        CHECK(rel(poisson_kernel(TypeIndex{0}, t, vec({x}), vec({y})).value, exact) < 1e-6);
    }
    const TypeIndex lam{0.5};
    CHECK(rel(poisson_kernel(lam, 0.6, vec({1}), vec({2.2})).value, poisson_kernel(lam, 0.6, vec({2.2}), vec({1})).value) <
          1e-12);
    const QuadResult mass = integrate_adaptive(
        [&](double y) { return poisson_kernel(lam, 0.6, vec({1}), vec({y})).value * y; }, 0,
        std::numeric_limits<double>::infinity(), 1e-7);
    CHECK(std::abs(mass.value - 1) < 1e-4);
}

TEST_CASE("kernels refuse the diagonal") {
    const Vec x = vec({1, 2});
    CHECK_THROWS_AS(require_off_diagonal(x, x), DomainError);
    CHECK_THROWS_AS(riesz_kernel_closed(TypeIndex{0, 0}, ivec({1, 0}), x, x), DomainError);
    CHECK_NOTHROW(require_off_diagonal(x, vec({1, 2.1})));
}
