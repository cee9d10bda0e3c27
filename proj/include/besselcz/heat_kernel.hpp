// The heat kernel W_t(x,y) of the Bessel operator and its derivatives.
//
//   kernel_product   Bessel-function product, valid for every lambda; the oracle.
//   kernel_schlafli  Omega_lambda integral, lambda >= 0 only.
//   kernel_extended  sum over eps in {0,1}^n of Omega_{lambda+1+eps} integrals.
//
// Derivatives of the extended form are built symbolically from IntegrandTerm
// lists and integrated against Omega_{lambda+1+eps}.

#ifndef BESSELCZ_HEAT_KERNEL_HPP
#define BESSELCZ_HEAT_KERNEL_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "besselcz/geometry.hpp"
#include "besselcz/specfun.hpp"

namespace besselcz {

template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MultiIndex = Eigen::VectorXi;

/// W_t(x,y) from the Bessel product, assembled as
/// exp(-|x-y|^2/4t) prod (2t)^{-lambda_i-1/2} z_i^{-nu_i} e^{-z_i} I_{nu_i}(z_i), z_i = x_i y_i / 2t.
template <class T>
T kernel_product(const TypeIndex& lam, T t, const VecT<T>& x, const VecT<T>& y) {
    if (!(t > 0)) throw DomainError("heat kernel: t must be positive");
    T log_w = -(x - y).squaredNorm() / (4 * t);
    const T log_2t = std::log(2 * t);
    for (int i = 0; i < lam.n(); ++i) {
        const T l = static_cast<T>(lam[i]);
        const T z = x[i] * y[i] / (2 * t);
        log_w += -(l + T(0.5)) * log_2t + std::log(bessel_i_scaled_reduced(l - T(0.5), z));
    }
    return std::exp(log_w);
}

inline double kernel_product(const TypeIndex& lam, double t, const Vec& x, const Vec& y) {
    return kernel_product<double>(lam, t, x, y);
}

/// Default number of Gauss nodes per coordinate for Omega integrals.
inline constexpr int kDefaultOrder = 64;

double kernel_schlafli(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order = kDefaultOrder);
double kernel_extended(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order = kDefaultOrder);

enum class KernelRep { Product, Schlafli, Extended };

const char* to_string(KernelRep rep);
double heat_kernel(KernelRep rep, const TypeIndex& lam, double t, const Vec& x, const Vec& y,
                   int order = kDefaultOrder);

/// c x^xpow y^ypow s^spow t^{W + tshift} q^qpow exp(-q/4t); W is carried by the owning list.
struct IntegrandTerm {
    double coeff = 1;
    Eigen::VectorXi xpow;
    Eigen::VectorXi ypow;
    Eigen::VectorXi spow;
    int tshift = 0;
    int qpow = 0;
};

/// A sum of IntegrandTerms sharing the base t-power W.
struct TermList {
    int n = 0;
    double W = 0;
    std::vector<IntegrandTerm> terms;

    double tpow(const IntegrandTerm& term) const { return W + term.tshift; }
    int max_spow() const;
    int max_qpow() const;
};

/// t^W (xy)^{2 eps} exp(-q/4t) as a single-term list.
TermList base_terms(int n, double W, const Eigen::VectorXi& eps);

void differentiate_x(TermList& list, int i);
void differentiate_y(TermList& list, int i);
void differentiate_t(TermList& list);
/// Combine terms with identical exponents and drop zero coefficients.
void merge_terms(TermList& list);

/// d_t^k d_x^m d_y^r [t^W (xy)^{2 eps} exp(-q/4t)] with the supplied W.
TermList derivative_terms(double W, const Eigen::VectorXi& eps, const MultiIndex& m, const MultiIndex& r, int k);
/// Same with W = -n/2 - |lambda| - 2|eps|.
TermList derivative_terms(const TypeIndex& lam, const Eigen::VectorXi& eps, const MultiIndex& m,
                          const MultiIndex& r, int k);

/// Value of the term list at a single s in [-1,1]^n.
double evaluate_terms(const TermList& list, const Vec& x, const Vec& y, const Vec& s, double t);

/// C_{lambda,eps} = prod (2 lambda_i + 1)^{1-eps_i} 2^{-n/2-|lambda|-2|eps|}.
double extended_constant(const TypeIndex& lam, const Eigen::VectorXi& eps);

/// All eps in {0,1}^n in a fixed order (bit i of the index is eps_i).
std::vector<Eigen::VectorXi> all_eps(int n);

/// Moments int s^d u^p exp(-a u) dOmega_eta(s), u = 1 + s, for each coordinate
/// and each eta in {lambda_i + 1, lambda_i + 2}, at a fixed (t,x,y).
class MomentTable {
public:
    /// rate_scale multiplies a_i = x_i y_i / 2t; it is 1/2 for exp(-q/8t) integrands.
    void prepare(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order, int dmax, int pmax,
                 double rate_scale = 1.0);
    double operator()(int i, int e, int d, int p) const {
        return data_[((static_cast<std::size_t>(i) * 2 + e) * (dmax_ + 1) + d) * (pmax_ + 1) + p];
    }
    int dmax() const { return dmax_; }
    int pmax() const { return pmax_; }

private:
    int dmax_ = 0, pmax_ = 0;
    std::vector<double> data_;
};

/// Value together with the sum of absolute term contributions, a scale for
/// judging cancellation.
struct ExpansionValue {
    double value = 0;
    double magnitude = 0;
};

/// d_t^k d_x^m d_y^r W_t(x,y) through the extended representation:
/// sum_eps C_eps sum_terms int term dOmega_{lambda+1+eps}.
class DerivativeExpansion {
public:
    DerivativeExpansion() = default;
    DerivativeExpansion(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k);

    const TypeIndex& lambda() const { return lam_; }
    const std::vector<TermList>& lists() const { return lists_; }
    int dmax() const { return dmax_; }
    int pmax() const { return pmax_; }
    std::size_t term_count() const;

    /// Evaluate at (t,x,y), times exp(log_extra). The table must have been
    /// prepared for the same (t,x,y) with at least dmax/pmax.
    ExpansionValue evaluate(const MomentTable& moments, double t, const Vec& x, const Vec& y,
                            double log_extra = 0) const;
    /// Convenience: prepares its own moment table.
    ExpansionValue evaluate(double t, const Vec& x, const Vec& y, int order = kDefaultOrder,
                            double log_extra = 0) const;

private:
    TypeIndex lam_;
    std::vector<Eigen::VectorXi> eps_;
    std::vector<TermList> lists_;
    std::vector<double> log_c_;
    int dmax_ = 0, pmax_ = 0;
};

/// Per-thread cache of expansions keyed by (lambda, m, r, k).
const DerivativeExpansion& cached_expansion(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k);

double kernel_derivative(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k, double t,
                         const Vec& x, const Vec& y, int order = kDefaultOrder);

/// Nested central differences of kernel_product in long double, extrapolated
/// Ridders-style over steps shrinking by 1.4. The step for x_i is
/// h * min(x_i, sqrt t, 2t/|x_i-y_i|), likewise for y_i, and h * t in time;
/// stencils never leave the half-space. In several dimensions the
/// one-dimensional factors are differenced separately and combined by the
/// Leibniz rule in t.
struct FdResult {
    double value = 0;
    double error = 0;  // disagreement of the chosen tableau entry with its neighbours
};
FdResult kernel_derivative_fd(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k, double t,
                              const Vec& x, const Vec& y, double h = 0.6, int richardson_levels = 10);

/// The majorant sum_{beta,gamma} x^{2eps-beta eps} y^{2eps-gamma eps}
/// t^{W-k-(|m|-|beta eps|+|r|-|gamma eps|)/2} exp(-q/8t) at a point s.
double est33_rhs(double W, const Eigen::VectorXi& eps, const MultiIndex& m, const MultiIndex& r, int k, double t,
                 const Vec& x, const Vec& y, const Vec& s);
/// The same majorant integrated against dOmega_{lambda+1+eps}.
double est33_rhs_integrated(const TypeIndex& lam, double W, const Eigen::VectorXi& eps, const MultiIndex& m,
                            const MultiIndex& r, int k, double t, const Vec& x, const Vec& y,
                            int order = kDefaultOrder);

}  // namespace besselcz

#endif  // BESSELCZ_HEAT_KERNEL_HPP
