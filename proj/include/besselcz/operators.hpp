// Operators built from the heat semigroup: application to test functions,
// the kernels of the maximal operator, the mixed square functions, Laplace and
// Laplace-Stieltjes type multipliers, Riesz transforms and the Poisson kernel.

#ifndef BESSELCZ_OPERATORS_HPP
#define BESSELCZ_OPERATORS_HPP

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "besselcz/hankel.hpp"
#include "besselcz/heat_kernel.hpp"
#include "besselcz/quadrature.hpp"

namespace besselcz {

/// A value with an error estimate and a convergence flag.
struct OpValue {
    double value = 0;
    double error = 0;
    bool converged = true;
    double magnitude = 0;  // integral of |integrand| where one is computed, a scale for cancellation
};

/// Kernel evaluations are restricted to |x-y| >= 1e-8 (|x|+|y|).
void require_off_diagonal(const Vec& x, const Vec& y);

// ---------------------------------------------------------------------------
// Semigroup applied to functions

/// W_t f(x) for f sampled on a grid.
OpValue heat_apply(const TypeIndex& lam, double t, const RadialGridFunction& f, const Vec& x);
/// W_t f(x) for a separable test function.
OpValue heat_apply(const TypeIndex& lam, double t, const TestFunction& f, const Vec& x);
/// d_x^m d_t^k W_t f(x) for a separable test function.
OpValue heat_derivative_apply(const TypeIndex& lam, const MultiIndex& m, int k, double t, const TestFunction& f,
                              const Vec& x);
/// g_{m,k} f(x) = || d_x^m d_t^k W_t f(x) ||_{L^2(t^{|m|+2k-1} dt)}.
OpValue g_apply(const TypeIndex& lam, const MultiIndex& m, int k, const TestFunction& f, const Vec& x);
/// ||g_{m,k} f||_2 / ||f||_2 in L^2(dmu_lambda), one dimension.
OpValue g_norm_ratio(const TypeIndex& lam, int m, int k, const TestFunction& f);

// ---------------------------------------------------------------------------
// Vector-valued kernels on a time grid

struct TimeProfile {
    LogTimeGrid grid;
    Eigen::VectorXd values;
    double weight_exponent = 0;  // the W of L^p(t^{W-1} dt)
    bool peak_bracketed = true;

    double sup_norm() const;
    /// (integral |v|^p t^{W-1} dt)^{1/p}, p in {1, 2}.
    double lp_norm(int p) const;
    /// Largest endpoint value relative to the peak.
    double endpoint_ratio() const;
};

/// [1e-6, 1e6] |x-y|^2 with 512 nodes.
LogTimeGrid default_time_grid(const Vec& x, const Vec& y, int nodes = 512);

TimeProfile maximal_profile(const TypeIndex& lam, const Vec& x, const Vec& y, const LogTimeGrid& grid,
                            int order = kDefaultOrder);
TimeProfile g_kernel_profile(const TypeIndex& lam, const MultiIndex& m, int k, const Vec& x, const Vec& y,
                             const LogTimeGrid& grid, int order = kDefaultOrder);

// ---------------------------------------------------------------------------
// Scalar kernels

struct LaplaceSymbol {
    std::function<double(double)> psi;
    double bound = 1;

    static LaplaceSymbol constant(double c);
    static LaplaceSymbol exponential(double a);  // e^{-a t}
};

/// -int psi(t) d_t W_t(x,y) dt.
OpValue laplace_mult_kernel(const TypeIndex& lam, const LaplaceSymbol& psi, const Vec& x, const Vec& y,
                            int order = kDefaultOrder);
/// The gradient in (x, y) of the Laplace multiplier kernel, 2n entries.
Vec laplace_mult_gradient(const TypeIndex& lam, const LaplaceSymbol& psi, const Vec& x, const Vec& y,
                          int order = kDefaultOrder);

struct StieltjesMeasure {
    std::vector<std::pair<double, std::complex<double>>> atoms;

    double total_variation() const;
};

std::complex<double> stieltjes_mult_kernel(const TypeIndex& lam, const StieltjesMeasure& nu, const Vec& x,
                                           const Vec& y, int order = kDefaultOrder);
/// Gradient in (x, y), 2n complex entries.
Eigen::VectorXcd stieltjes_mult_gradient(const TypeIndex& lam, const StieltjesMeasure& nu, const Vec& x,
                                         const Vec& y, int order = kDefaultOrder);

/// R_m(x,y) = Gamma(|m|/2)^{-1} int d_x^m W_t(x,y) t^{|m|/2-1} dt by time quadrature.
/// dx, dy add derivatives that do not enter the time weight; they give gradients.
OpValue riesz_kernel_time(const TypeIndex& lam, const MultiIndex& m, const Vec& x, const Vec& y,
                          int order = kDefaultOrder, const MultiIndex& dx = {}, const MultiIndex& dy = {});
/// The same kernel with the time integral done in closed form term by term,
/// leaving only the Omega integrals.
OpValue riesz_kernel_closed(const TypeIndex& lam, const MultiIndex& m, const Vec& x, const Vec& y,
                            int order = 20, const MultiIndex& dx = {}, const MultiIndex& dy = {});

/// P_t(x,y) = int W_{t^2/4u}(x,y) e^{-u} / sqrt(pi u) du.
OpValue poisson_kernel(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order = kDefaultOrder);

// ---------------------------------------------------------------------------
// Spectral multipliers

using Multiplier = std::function<std::complex<double>(double)>;

/// h(M(|z|) h f)(x).
std::complex<double> multiplier_apply_spectral(const TypeIndex& lam, const Multiplier& M, const RadialGridFunction& f,
                                               const Vec& x);

/// <T_M f, g> = int M(|z|) hf(z) hg(z) dmu(z), one dimension.
double multiplier_matrix_element_spectral(const TypeIndex& lam, const std::function<double(double)>& M,
                                          const TestFunction& f, const TestFunction& g);
/// The same matrix element as a double integral of the Laplace multiplier
/// kernel; f and g must have separated supports. One dimension.
double laplace_matrix_element_kernel(const TypeIndex& lam, const LaplaceSymbol& psi, const TestFunction& f,
                                     const TestFunction& g);

}  // namespace besselcz

#endif  // BESSELCZ_OPERATORS_HPP
