// The Hankel transform h_lambda f(x) = int phi_x(y) f(y) dmu_lambda(y),
// phi_x(y) = prod (x_i y_i)^{-lambda_i+1/2} J_{lambda_i-1/2}(x_i y_i).

#ifndef BESSELCZ_HANKEL_HPP
#define BESSELCZ_HANKEL_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "besselcz/geometry.hpp"
#include "besselcz/quadrature.hpp"

namespace besselcz {

/// One coordinate factor of a separable test function: exp(-(y-center)^2 / 2 sigma^2),
/// or the constant 1.
struct Factor {
    double center = 0;
    double sigma = 1;
    bool constant = false;

    double operator()(double y) const {
        if (constant) return 1;
        const double d = (y - center) / sigma;
        return std::exp(-0.5 * d * d);
    }
};

/// sum_k coeff_k prod_i factor_{k,i}(y_i).
struct TestFunction {
    struct Component {
        double coeff = 1;
        std::vector<Factor> factors;
    };
    int n = 1;
    std::vector<Component> components;

    double operator()(const Vec& y) const;
    TestFunction scaled(double c) const;

    /// exp(-|y|^2 / 2 sigma^2).
    static TestFunction gaussian(int n, double sigma = 1);
    /// exp(-|y - center|^2 / 2 sigma^2).
    static TestFunction gaussian_at(const Vec& center, double sigma);
    static TestFunction constant(int n);
    static TestFunction zero(int n);
};

/// Tensor-product quadrature for dmu_lambda on prod (0, x_max]. Axis rules
/// carry the weight y^{2 lambda_i}.
struct HankelGrid {
    std::vector<GaussRule> axes;

    int n() const { return static_cast<int>(axes.size()); }
    Eigen::Index size() const;
    /// Point of flat index idx; coordinate 0 varies fastest.
    Vec point(Eigen::Index idx) const;
    double x_max = 0;
    double spacing = 0;  // largest node gap, for the oscillation guard
};

HankelGrid make_hankel_grid(const TypeIndex& lam, double x_max = 12, double panel = 0.5, int nodes = 16);

/// Values of a function at the nodes of a HankelGrid.
struct RadialGridFunction {
    HankelGrid grid;
    Eigen::VectorXd values;
};

RadialGridFunction sample(const TestFunction& f, const HankelGrid& grid);
RadialGridFunction sample(const std::function<double(const Vec&)>& f, const HankelGrid& grid);

/// phi_x(y); the removable singularity at x_i y_i = 0 is evaluated by series.
double phi_kernel(const TypeIndex& lam, const Vec& x, const Vec& y);

/// |phi_x(y)| together with prod b(x_i y_i), b(z) = 1 for z <= 1 and z^{-lambda_i} for z >= 1.
struct PhiBound {
    double phi = 0;
    double bound = 0;
};
PhiBound phi_bound_margin(const TypeIndex& lam, const Vec& x, const Vec& y);

struct TransformValue {
    double value = 0;
    double truncation = 0;  // bound on the part of the integral beyond the grid
    bool flagged = false;   // grid too coarse for the oscillation at this x
};

/// h_lambda f(x) by quadrature over the grid of f.
TransformValue hankel_transform(const TypeIndex& lam, const RadialGridFunction& f, const Vec& x);

/// h_lambda f evaluated at every node of f's grid, by separable mode products.
RadialGridFunction hankel_transform_grid(const TypeIndex& lam, const RadialGridFunction& f);

/// h_lambda f(x) for a separable test function, coordinate by coordinate with
/// rules adapted to each factor and to the oscillation of phi.
TransformValue hankel_transform(const TypeIndex& lam, const TestFunction& f, const Vec& x);

/// Rule for int g(y) y^{2 lambda} dy over the support of a factor, refined to
/// resolve oscillation at frequency `frequency`.
GaussRule factor_rule(const Factor& factor, double lambda, double frequency = 0, double upper_for_constant = 0);

}  // namespace besselcz

#endif  // BESSELCZ_HANKEL_HPP
