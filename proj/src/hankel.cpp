#include "besselcz/hankel.hpp"

#include <algorithm>
#include <array>
#include <numbers>

#include "besselcz/specfun.hpp"

namespace besselcz {

double TestFunction::operator()(const Vec& y) const {
    double sum = 0;
    for (const auto& c : components) {
        double v = c.coeff;
        for (int i = 0; i < n; ++i) v *= c.factors[i](y[i]);
        sum += v;
    }
    return sum;
}

TestFunction TestFunction::scaled(double c) const {
    TestFunction out = *this;
    for (auto& comp : out.components) comp.coeff *= c;
    return out;
}

TestFunction TestFunction::gaussian(int n, double sigma) { return gaussian_at(Vec::Zero(n), sigma); }

TestFunction TestFunction::gaussian_at(const Vec& center, double sigma) {
    if (!(sigma > 0)) throw DomainError("gaussian: sigma must be positive");
    TestFunction f;
    f.n = static_cast<int>(center.size());
    Component c;
    for (int i = 0; i < f.n; ++i) c.factors.push_back({center[i], sigma, false});
    f.components.push_back(c);
    return f;
}

TestFunction TestFunction::constant(int n) {
    TestFunction f;
    f.n = n;
    Component c;
    for (int i = 0; i < n; ++i) c.factors.push_back({0, 1, true});
    f.components.push_back(c);
    return f;
}

TestFunction TestFunction::zero(int n) {
    TestFunction f;
    f.n = n;
    return f;
}

Eigen::Index HankelGrid::size() const {
    Eigen::Index s = 1;
    for (const auto& a : axes) s *= a.size();
    return s;
}

Vec HankelGrid::point(Eigen::Index idx) const {
    Vec p(n());
    for (int i = 0; i < n(); ++i) {
        p[i] = axes[i].nodes[idx % axes[i].size()];
        idx /= axes[i].size();
    }
    return p;
}

HankelGrid make_hankel_grid(const TypeIndex& lam, double x_max, double panel, int nodes) {
    if (!(x_max > 0 && panel > 0 && nodes >= 2)) throw DomainError("make_hankel_grid: invalid parameters");
    HankelGrid grid;
    grid.x_max = x_max;
    for (int i = 0; i < lam.n(); ++i) {
        std::vector<Feature> uniform;
        for (double c = 0; c < x_max; c += panel) uniform.push_back({c, panel});
        grid.axes.push_back(feature_rule(uniform, x_max, 2 * lam[i], nodes));
        const GaussRule& r = grid.axes.back();
        double gap = r.nodes[0];
        for (Eigen::Index k = 1; k < r.size(); ++k) gap = std::max(gap, r.nodes[k] - r.nodes[k - 1]);
        grid.spacing = std::max(grid.spacing, gap);
    }
    return grid;
}

RadialGridFunction sample(const std::function<double(const Vec&)>& f, const HankelGrid& grid) {
    RadialGridFunction out;
    out.grid = grid;
    out.values.resize(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) out.values[k] = f(grid.point(k));
    return out;
}

RadialGridFunction sample(const TestFunction& f, const HankelGrid& grid) {
    if (f.n != grid.n()) throw DomainError("sample: dimension mismatch");
    return sample([&](const Vec& y) { return f(y); }, grid);
}

double phi_kernel(const TypeIndex& lam, const Vec& x, const Vec& y) {
    double v = 1;
    for (int i = 0; i < lam.n(); ++i) v *= bessel_j_reduced(lam[i] - 0.5, x[i] * y[i]);
    return v;
}

PhiBound phi_bound_margin(const TypeIndex& lam, const Vec& x, const Vec& y) {
    PhiBound out;
    out.phi = std::abs(phi_kernel(lam, x, y));
    out.bound = 1;
    for (int i = 0; i < lam.n(); ++i) {
        const double z = x[i] * y[i];
        if (z > 1) out.bound *= std::pow(z, -lam[i]);
    }
    return out;
}

namespace {

// Points per oscillation period below which the grid is considered too coarse.
constexpr double kPointsPerPeriod = 20;

bool oscillation_flag(const HankelGrid& grid, const Vec& x) {
    const double period = 2 * std::numbers::pi / std::max(x.maxCoeff(), 1e-300);
    // The Gauss panels resolve roughly twice the oscillations of a uniform grid
    // with the same largest gap.
    return period / grid.spacing * 2 < kPointsPerPeriod;
}

// Axis matrix A[a][b] = phi(z_a y_b) w_b.
Eigen::MatrixXd axis_matrix(double lambda, const GaussRule& out, const GaussRule& in) {
    Eigen::MatrixXd A(out.size(), in.size());
    for (Eigen::Index a = 0; a < out.size(); ++a)
        for (Eigen::Index b = 0; b < in.size(); ++b)
            A(a, b) = bessel_j_reduced(lambda - 0.5, out.nodes[a] * in.nodes[b]) * in.weights[b];
    return A;
}

// Multiply the tensor stored in `data` along axis i by A.
Eigen::VectorXd mode_product(const Eigen::VectorXd& data, const std::vector<Eigen::Index>& dims, int axis,
                             const Eigen::MatrixXd& A) {
    Eigen::Index prefix = 1, suffix = 1;
    for (int j = 0; j < axis; ++j) prefix *= dims[j];
    for (std::size_t j = axis + 1; j < dims.size(); ++j) suffix *= dims[j];
    const Eigen::Index in = dims[axis], out = A.rows();
    Eigen::VectorXd result(prefix * out * suffix);
    for (Eigen::Index s = 0; s < suffix; ++s) {
        Eigen::Map<const Eigen::MatrixXd> block(data.data() + s * prefix * in, prefix, in);
        Eigen::Map<Eigen::MatrixXd> target(result.data() + s * prefix * out, prefix, out);
        target.noalias() = block * A.transpose();
    }
    return result;
}

}  // namespace

TransformValue hankel_transform(const TypeIndex& lam, const RadialGridFunction& f, const Vec& x) {
    const HankelGrid& grid = f.grid;
    if (grid.n() != lam.n()) throw DomainError("hankel_transform: dimension mismatch");
    require_half_space(x, lam.n(), "x");
    // Contract one axis at a time with the vector phi(x_i y) w.
    std::vector<Eigen::Index> dims;
    for (const auto& a : grid.axes) dims.push_back(a.size());
    Eigen::VectorXd data = f.values;
    for (int i = 0; i < lam.n(); ++i) {
        GaussRule point;
        point.nodes = Eigen::VectorXd::Constant(1, x[i]);
        point.weights = Eigen::VectorXd::Ones(1);
        data = mode_product(data, dims, i, axis_matrix(lam[i], point, grid.axes[i]));
        dims[i] = 1;
    }
    TransformValue out;
    out.value = data[0];
    // Truncation: |phi| <= 2^{1/2-lambda}/Gamma(lambda+1/2) max(1, ...) is bounded by the
    // largest |phi| on the grid; the tail mass is bounded by the boundary values.
    double boundary = 0;
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const Vec p = grid.point(k);
        bool on_edge = false;
        for (int i = 0; i < grid.n(); ++i) on_edge |= p[i] == grid.axes[i].nodes[grid.axes[i].size() - 1];
        if (on_edge) boundary = std::max(boundary, std::abs(f.values[k]));
    }
    double mass = 1;
    for (int i = 0; i < lam.n(); ++i) mass *= std::pow(grid.x_max, 2 * lam[i] + 1) / (2 * lam[i] + 1);
    out.truncation = boundary * mass;
    out.flagged = oscillation_flag(grid, x);
    return out;
}

RadialGridFunction hankel_transform_grid(const TypeIndex& lam, const RadialGridFunction& f) {
    const HankelGrid& grid = f.grid;
    if (grid.n() != lam.n()) throw DomainError("hankel_transform_grid: dimension mismatch");
    std::vector<Eigen::Index> dims;
    for (const auto& a : grid.axes) dims.push_back(a.size());
    Eigen::VectorXd data = f.values;
    for (int i = 0; i < lam.n(); ++i) data = mode_product(data, dims, i, axis_matrix(lam[i], grid.axes[i], grid.axes[i]));
    RadialGridFunction out;
    out.grid = grid;
    out.values = std::move(data);
    return out;
}

GaussRule factor_rule(const Factor& factor, double lambda, double frequency, double upper_for_constant) {
    std::vector<Feature> features;
    double lower = 0, upper;
    if (factor.constant) {
        if (!(upper_for_constant > 0)) throw DomainError("factor_rule: a constant factor needs an upper limit");
        upper = upper_for_constant;
        features.push_back({0, 0.5});
    } else {
        // exp(-d^2/2) < 1e-17 beyond 9 sigma.
        upper = factor.center + 9 * factor.sigma;
        lower = std::max(0.0, factor.center - 9 * factor.sigma);
        features.push_back({factor.center, factor.sigma / 2});
    }
    if (frequency > 0) {
        // Two radians of phase per panel.
        const double w = 2.0 / frequency;
        if ((upper - lower) / w > 20000) throw NumericalError("factor_rule: oscillation too fast to resolve");
        for (double c = lower; c < upper; c += w) features.push_back({c, w});
    }
    if (lower > 0) return feature_rule(features, upper, 2 * lambda, 16, lower);
    return feature_rule(features, upper, 2 * lambda, 16);
}

TransformValue hankel_transform(const TypeIndex& lam, const TestFunction& f, const Vec& x) {
    if (f.n != lam.n()) throw DomainError("hankel_transform: dimension mismatch");
    require_half_space(x, lam.n(), "x");
    TransformValue out;
    for (const auto& comp : f.components) {
        double v = comp.coeff;
        for (int i = 0; i < lam.n(); ++i) {
            const Factor& fac = comp.factors[i];
            if (fac.constant) throw DomainError("hankel_transform: constant factors are not integrable");
            const GaussRule rule = factor_rule(fac, lam[i], x[i]);
            double s = 0;
            for (Eigen::Index k = 0; k < rule.size(); ++k)
                s += rule.weights[k] * fac(rule.nodes[k]) * bessel_j_reduced(lam[i] - 0.5, x[i] * rule.nodes[k]);
            v *= s;
        }
        out.value += v;
    }
    return out;
}

}  // namespace besselcz
