// Quadrature rules: Gauss-Jacobi/Gegenbauer rules for the Omega_eta measures,
// logarithmic time grids, adaptive Gauss-Kronrod integration and composite
// rules adapted to localized features.

#ifndef BESSELCZ_QUADRATURE_HPP
#define BESSELCZ_QUADRATURE_HPP

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace besselcz {

/// Nodes and weights of a one-dimensional rule.
struct GaussRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    Eigen::Index size() const { return nodes.size(); }

    /// Apply the rule to a callable.
    template <class F>
    double apply(F&& f) const {
        double sum = 0;
        for (Eigen::Index i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
        return sum;
    }
};

/// Gauss-Jacobi rule on [-1,1] for the weight (1-x)^alpha (1+x)^beta,
/// alpha, beta > -1. Nodes ascending.
GaussRule jacobi_rule(double alpha, double beta, int order);

/// Gauss-Legendre rule on [-1,1].
GaussRule legendre_rule(int order);

/// Quadrature for dOmega_eta(s) = (1-s^2)^{eta-1} ds / (sqrt(pi) 2^{eta-1/2} Gamma(eta))
/// on [-1,1]; at eta = 0 the measure is (delta_{-1} + delta_{+1}) / sqrt(2 pi).
struct GegenbauerRule {
    double eta = 0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    bool is_atomic = false;
};

GegenbauerRule gegenbauer_rule(double eta, int order);

/// Total mass 1 / (2^{eta-1/2} Gamma(eta+1/2)) of Omega_eta.
double omega_mass(double eta);

/// Normalising constant sqrt(pi) 2^{eta-1/2} Gamma(eta) of Omega_eta, eta > 0.
double omega_normalizer(double eta);

/// A rule for dOmega_eta expressed in u = 1 + s in [0,2], tuned for a given
/// integrand shape. Weights already include the Omega_eta density.
struct OmegaRule {
    Eigen::VectorXd u;
    Eigen::VectorXd weights;
};

/// Rule for integrands of the form p(s) e^{-rate (1+s)}, p a polynomial of the
/// given degree. For large rates the mass concentrates at s = -1 and the rule is
/// split at u = L / rate so that the exponential is resolved.
OmegaRule omega_exp_rule(double eta, int order, double rate, int degree = 0);
/// Same rule by reference; `scratch` holds it when it depends on the rate.
const OmegaRule& omega_exp_rule_ref(double eta, int order, double rate, int degree, OmegaRule& scratch);

/// Rule for integrands smooth on (0,2] but varying on the length scale delta
/// near u = 0, e.g. (delta + u)^{-b}. Panels grade geometrically from delta.
OmegaRule omega_graded_rule(double eta, int order, double delta);

/// Discretisation of integral dt over [t_min, t_max], log-uniform composite
/// Gauss-Legendre in v = log t.
struct LogTimeGrid {
    double t_min = 0;
    double t_max = 0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

LogTimeGrid time_grid(double t_min, double t_max, int n);

/// Result of an adaptive integration.
struct QuadResult {
    double value = 0;
    double error = 0;
    bool converged = true;
    int evaluations = 0;
};

/// Endpoint behaviour declared by the caller: f(x) ~ (x-a)^left_exponent near a
/// and ~ (b-x)^right_exponent near b, exponents in (-1, 0]. A power
/// substitution removes the singularity before integrating.
struct SingularityHints {
    double left_exponent = 0;
    double right_exponent = 0;
};

/// Adaptive G7-K15 integration of f over [a,b]; b may be +infinity.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                              SingularityHints hints = {}, int max_intervals = 2000);

/// Integral of g over the whole real line, where g decays exponentially at
/// both ends. [v_lo, v_hi] is integrated adaptively; beyond it the tails are
/// closed analytically from the decay rate measured at the window ends.
struct LineResult {
    double value = 0;
    double error = 0;
    double tail = 0;  // analytic tail contribution included in value
    bool converged = true;
};

LineResult integrate_line(const std::function<double(double)>& g, double v_lo, double v_hi, double rel_tol,
                          double abs_tol = 0);

/// Fixed composite Gauss-Legendre rule on [v_lo, v_hi] with panels of width at
/// most panel_width and the given number of nodes per panel.
GaussRule composite_rule(double v_lo, double v_hi, double panel_width, int nodes_per_panel);

/// Decay rate log|g_inner / g_outer| / h of a tail, from two values a distance
/// h apart; +infinity if the outer value underflows.
double tail_rate(double g_inner, double g_outer, double h);

/// A localised feature of a one-dimensional integrand: something centred at
/// `center` varying on the scale `width`.
struct Feature {
    double center = 0;
    double width = 1;
};

/// Composite rule for integral_0^upper g(y) y^{weight_exponent} dy. Panel width
/// near each feature equals the feature width and grows linearly with the
/// distance from it. The first panel carries the Jacobi weight y^{weight_exponent}.
GaussRule feature_rule(std::span<const Feature> features, double upper, double weight_exponent,
                       int nodes_per_panel = 10, double lower = 0);

}  // namespace besselcz

#endif  // BESSELCZ_QUADRATURE_HPP
