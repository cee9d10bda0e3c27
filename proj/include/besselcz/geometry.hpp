// The space (R^n_+, mu_lambda, |.|): type indices, the q-form, ball measures.

#ifndef BESSELCZ_GEOMETRY_HPP
#define BESSELCZ_GEOMETRY_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>

#include <Eigen/Dense>

#include "besselcz/errors.hpp"

namespace besselcz {

using Vec = Eigen::VectorXd;

/// lambda in (-1/2, inf)^n.
class TypeIndex {
public:
    TypeIndex() = default;
    explicit TypeIndex(Vec lambda) : lambda_(std::move(lambda)) { validate(); }
    TypeIndex(std::initializer_list<double> values) : lambda_(static_cast<Eigen::Index>(values.size())) {
        Eigen::Index i = 0;
        for (double v : values) lambda_[i++] = v;
        validate();
    }
    /// n copies of the same value.
    static TypeIndex uniform(int n, double value) { return TypeIndex(Vec::Constant(n, value)); }

    int n() const { return static_cast<int>(lambda_.size()); }
    double operator[](int i) const { return lambda_[i]; }
    const Vec& values() const { return lambda_; }
    /// |lambda| = sum of entries.
    double abs() const { return lambda_.sum(); }
    /// 2 lambda + 1, entrywise positive.
    Vec two_lambda_plus_one() const { return (2 * lambda_.array() + 1).matrix(); }
    bool nonnegative() const { return (lambda_.array() >= 0).all(); }

private:
    void validate() const {
        if (lambda_.size() == 0) throw DomainError("lambda must have at least one entry");
        for (Eigen::Index i = 0; i < lambda_.size(); ++i)
            if (!(lambda_[i] > -0.5) || !std::isfinite(lambda_[i]))
                throw DomainError("lambda entries must be finite and > -1/2, got " + std::to_string(lambda_[i]));
    }
    Vec lambda_;
};

/// Throws unless every coordinate is positive and finite and the dimension matches.
void require_half_space(const Vec& x, int n, const char* name = "point");

/// q(x,y,s) = |x|^2 + |y|^2 + 2 sum x_i y_i s_i.
template <class DX, class DY, class DS>
auto q_form(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DS>& s) {
    using T = typename DX::Scalar;
    T q = x.squaredNorm() + y.squaredNorm();
    for (Eigen::Index i = 0; i < x.size(); ++i) q += 2 * x[i] * y[i] * s[i];
    return q;
}

/// q written as |x-y|^2 + sum 2 x_i y_i (1 + s_i), exact for s near -1.
template <class DX, class DY, class DS>
auto q_form_stable(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DS>& u) {
    using T = typename DX::Scalar;
    T q = (x - y).squaredNorm();
    for (Eigen::Index i = 0; i < x.size(); ++i) q += 2 * x[i] * y[i] * u[i];
    return q;
}

/// V(x,R) = R^n prod (x_j + R)^{2 lambda_j}, the closed form comparable to mu_lambda(B(x,R)).
template <class D>
double v_lambda(const TypeIndex& lam, const Eigen::MatrixBase<D>& x, double R) {
    double log_v = lam.n() * std::log(R);
    for (int j = 0; j < lam.n(); ++j) log_v += 2 * lam[j] * std::log(x[j] + R);
    return std::exp(log_v);
}

/// log V(x,R).
template <class D>
double log_v_lambda(const TypeIndex& lam, const Eigen::MatrixBase<D>& x, double R) {
    double log_v = lam.n() * std::log(R);
    for (int j = 0; j < lam.n(); ++j) log_v += 2 * lam[j] * std::log(x[j] + R);
    return log_v;
}

/// x v y, coordinatewise maximum.
template <class DX, class DY>
Vec join_max(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
    return x.cwiseMax(y);
}

struct BallMeasure {
    double value = 0;
    double error = 0;       // standard error over randomised QMC replicates; 0 when exact
    bool exact = false;
    bool flagged = false;   // error bar exceeds 1% of the value
};

/// mu_lambda(B(x,R) intersected with R^n_+). Exact for n = 1; for n >= 2 a
/// randomly shifted Halton estimate with `budget` points in total.
BallMeasure mu_ball(const TypeIndex& lam, const Vec& x, double R, int budget = 1 << 15,
                    std::uint64_t seed = 0x5eed);

/// Radical inverse of i in the given prime base.
double radical_inverse(std::uint64_t i, int base);

/// The first n primes (n <= 32).
int nth_prime(int index);

}  // namespace besselcz

#endif  // BESSELCZ_GEOMETRY_HPP
