#include "besselcz/operators.hpp"

#include <algorithm>
#include <map>
#include <numbers>

namespace besselcz {

void require_off_diagonal(const Vec& x, const Vec& y) {
    if (!((x - y).norm() >= 1e-8 * (x.norm() + y.norm())))
        throw DomainError("kernel evaluation requires x != y (|x-y| >= 1e-8 (|x|+|y|))");
}

namespace {

MultiIndex zeros(int n) { return MultiIndex::Zero(n); }

MultiIndex or_zeros(const MultiIndex& m, int n) {
    if (m.size() == 0) return zeros(n);
    if (m.size() != n) throw DomainError("multi-index has the wrong dimension");
    if ((m.array() < 0).any()) throw DomainError("multi-index entries must be nonnegative");
    return m;
}

TypeIndex axis_lambda(const TypeIndex& lam, int i) { return TypeIndex{lam[i]}; }

Vec scalar(double v) { return Vec::Constant(1, v); }

// Calls f(parts) for each way of writing k as an ordered sum of n nonnegative parts.
template <class F>
void for_each_split(int n, int k, F&& f) {
    std::vector<int> parts(n, 0);
    auto rec = [&](auto&& self, int slot, int left) -> void {
        if (slot == n - 1) {
            parts[slot] = left;
            f(parts);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            parts[slot] = v;
            self(self, slot + 1, left - v);
        }
    };
    rec(rec, 0, k);
}

double multinomial(int k, const std::vector<int>& parts) {
    double l = std::lgamma(k + 1.0);
    for (int p : parts) l -= std::lgamma(p + 1.0);
    return std::round(std::exp(l));
}

// int d_x^m d_t^k W^{lambda}_t(x, y) g(y) y^{2 lambda} dy in one dimension.
double axis_integral(double lambda, int m, int k, double t, double x, const Factor& factor, int nodes_per_panel) {
    const double sq = std::sqrt(t);
    double lo = std::max(0.0, x - 14 * sq), hi = x + 14 * sq;
    std::vector<Feature> features{{x, sq / 2}};
    if (!factor.constant) {
        lo = std::max(lo, factor.center - 9 * factor.sigma);
        hi = std::min(hi, factor.center + 9 * factor.sigma);
        features.push_back({factor.center, factor.sigma / 2});
    }
    if (!(hi > lo)) return 0;
    if (lo == 0) features.push_back({0, sq / 2});
    const TypeIndex lam{lambda};
    const DerivativeExpansion& expansion = cached_expansion(lam, MultiIndex::Constant(1, m), zeros(1), k);
    const GaussRule rule = feature_rule(features, hi, 2 * lambda, nodes_per_panel, lo);
    const Vec xv = scalar(x);
    double sum = 0;
    for (Eigen::Index j = 0; j < rule.size(); ++j) {
        const double y = rule.nodes[j];
        const double g = factor(y);
        if (g == 0) continue;
        sum += rule.weights[j] * g * expansion.evaluate(t, xv, scalar(y), 32).value;
    }
    return sum;
}

double derivative_apply(const TypeIndex& lam, const MultiIndex& m, int k, double t, const TestFunction& f,
                        const Vec& x, int nodes_per_panel) {
    const int n = lam.n();
    double total = 0;
    for (const auto& comp : f.components) {
        // Leibniz rule for d_t^k of the product over coordinates.
        for_each_split(n, k, [&](const std::vector<int>& ks) {
            double v = comp.coeff * multinomial(k, ks);
            for (int i = 0; i < n && v != 0; ++i)
                v *= axis_integral(lam[i], m[i], ks[i], t, x[i], comp.factors[i], nodes_per_panel);
            total += v;
        });
    }
    return total;
}

void check_function(const TypeIndex& lam, const TestFunction& f, const Vec& x) {
    if (f.n != lam.n()) throw DomainError("test function dimension does not match lambda");
    require_half_space(x, lam.n(), "x");
}

// Integral over the real line of g, with the absolute tolerance tied to the
// integrand's own scale found on a coarse scan.
LineResult scaled_line_integral(const std::function<double(double)>& g, double v_lo, double v_hi, double rel_tol) {
    double scale = 0;
    for (int i = 0; i <= 48; ++i) scale = std::max(scale, std::abs(g(v_lo + (v_hi - v_lo) * i / 48)));
    return integrate_line(g, v_lo, v_hi, rel_tol, 1e-3 * rel_tol * scale);
}

OpValue from_line(const LineResult& r) { return {r.value, r.error, r.converged, 0}; }

// Integral of |g| over the window on a fixed composite rule; only a scale.
double abs_integral(const std::function<double(double)>& g, double v_lo, double v_hi) {
    const GaussRule rule = composite_rule(v_lo, v_hi, 0.5, 6);
    return rule.apply([&](double v) { return std::abs(g(v)); });
}

// Window in v = log t for time integrals of kernels: below log(D/200) the
// factor exp(-D/4t) is < e^-50.
std::pair<double, double> kernel_window(const Vec& x, const Vec& y) {
    const double D = (x - y).squaredNorm();
    return {std::log(D / 200), std::log(x.squaredNorm() + y.squaredNorm()) + 25};
}

}  // namespace

// ---------------------------------------------------------------------------
// Semigroup applied to functions

OpValue heat_apply(const TypeIndex& lam, double t, const RadialGridFunction& f, const Vec& x) {
    if (!(t > 0)) throw DomainError("heat_apply: t must be positive");
    if (f.grid.n() != lam.n()) throw DomainError("heat_apply: grid dimension does not match lambda");
    require_half_space(x, lam.n(), "x");
    // The kernel is a product over coordinates; contract one axis at a time.
    Eigen::VectorXd data = f.values;
    double kernel_mass = 1;
    for (int i = 0; i < lam.n(); ++i) {
        const GaussRule& axis = f.grid.axes[i];
        Eigen::VectorXd k(axis.size());
        for (Eigen::Index b = 0; b < axis.size(); ++b)
            k[b] = kernel_extended(axis_lambda(lam, i), t, scalar(x[i]), scalar(axis.nodes[b])) * axis.weights[b];
        kernel_mass *= k.sum();
        const Eigen::Index rest = data.size() / axis.size();
        data = Eigen::Map<const Eigen::MatrixXd>(data.data(), axis.size(), rest).transpose() * k;
    }
    OpValue out;
    out.value = data[0];
    out.error = std::abs(1 - kernel_mass) * f.values.cwiseAbs().maxCoeff();
    out.converged = out.error < 1e-6 * std::max(1.0, std::abs(out.value));
    return out;
}

OpValue heat_derivative_apply(const TypeIndex& lam, const MultiIndex& m, int k, double t, const TestFunction& f,
                              const Vec& x) {
    check_function(lam, f, x);
    if (!(t > 0)) throw DomainError("heat_apply: t must be positive");
    if (k < 0) throw DomainError("time derivative order must be nonnegative");
    const MultiIndex mm = or_zeros(m, lam.n());
    const double fine = derivative_apply(lam, mm, k, t, f, x, 16);
    const double coarse = derivative_apply(lam, mm, k, t, f, x, 10);
    OpValue out{fine, std::abs(fine - coarse), true};
    out.converged = out.error <= 1e-8 * std::max(std::abs(fine), 1e-300) || out.error < 1e-14;
    return out;
}

OpValue heat_apply(const TypeIndex& lam, double t, const TestFunction& f, const Vec& x) {
    return heat_derivative_apply(lam, zeros(lam.n()), 0, t, f, x);
}

OpValue g_apply(const TypeIndex& lam, const MultiIndex& m, int k, const TestFunction& f, const Vec& x) {
    check_function(lam, f, x);
    const MultiIndex mm = or_zeros(m, lam.n());
    if (mm.sum() + k == 0) throw DomainError("g_apply: need |m| + k > 0");
    if (f.components.empty()) return {};
    double scale = x.squaredNorm(), width = 1e300;
    for (const auto& comp : f.components)
        for (const auto& fac : comp.factors) {
            if (fac.constant) continue;
            scale = std::max(scale, fac.center * fac.center + fac.sigma * fac.sigma);
            width = std::min(width, fac.sigma * fac.sigma);
        }
    if (width == 1e300) width = 1;
    const double power = mm.sum() + 2.0 * k;
    auto integrand = [&](double v) {
        const double t = std::exp(v);
        const double d = derivative_apply(lam, mm, k, t, f, x, 8);
        return d * d * std::exp(power * v);
    };
    const LineResult r = scaled_line_integral(integrand, std::log(1e-4 * width), std::log(1e6 * scale), 1e-7);
    OpValue out;
    out.value = std::sqrt(std::max(r.value, 0.0));
    out.error = out.value > 0 ? r.error / (2 * out.value) : std::sqrt(r.error);
    out.converged = r.converged;
    return out;
}

OpValue g_norm_ratio(const TypeIndex& lam, int m, int k, const TestFunction& f) {
    if (lam.n() != 1 || f.n != 1) throw DomainError("g_norm_ratio: one dimension only");
    if (f.components.empty()) throw DomainError("g_norm_ratio: f must be nonzero");
    double scale = 0;
    for (const auto& comp : f.components) {
        const Factor& fac = comp.factors[0];
        if (fac.constant) throw DomainError("g_norm_ratio: f must be square integrable");
        scale = std::max(scale, std::abs(fac.center) + fac.sigma);
    }
    const MultiIndex mm = MultiIndex::Constant(1, m);
    const double weight = 2 * lam[0] + 1;
    // Both norms as integrals in v = log x.
    auto g_sq = [&](double v) {
        const double g = g_apply(lam, mm, k, f, Vec::Constant(1, std::exp(v))).value;
        return g * g * std::exp(weight * v);
    };
    auto f_sq = [&](double v) {
        const double y = f(Vec::Constant(1, std::exp(v)));
        return y * y * std::exp(weight * v);
    };
    const double lo = std::log(1e-3 * scale), hi = std::log(1e4 * scale);
    const LineResult num = integrate_line(g_sq, lo, hi, 1e-6);
    const LineResult den = integrate_line(f_sq, lo, hi, 1e-10);
    OpValue out;
    out.value = std::sqrt(num.value / den.value);
    out.error = out.value * (num.error / num.value + den.error / den.value) / 2;
    out.converged = num.converged && den.converged;
    return out;
}

// ---------------------------------------------------------------------------
// Time profiles

double TimeProfile::sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }

double TimeProfile::lp_norm(int p) const {
    if (p != 1 && p != 2) throw DomainError("lp_norm: p must be 1 or 2");
    double s = 0;
    for (Eigen::Index j = 0; j < values.size(); ++j)
        s += grid.weights[j] * std::pow(std::abs(values[j]), p) * std::pow(grid.nodes[j], weight_exponent - 1);
    return p == 1 ? s : std::sqrt(s);
}

double TimeProfile::endpoint_ratio() const {
    const double peak = sup_norm();
    if (peak == 0) return 0;
    return std::max(std::abs(values[0]), std::abs(values[values.size() - 1])) / peak;
}

LogTimeGrid default_time_grid(const Vec& x, const Vec& y, int nodes) {
    const double D = (x - y).squaredNorm();
    return time_grid(1e-6 * D, 1e6 * D, nodes);
}

namespace {

TimeProfile profile_of(const DerivativeExpansion& expansion, double weight_exponent, const Vec& x, const Vec& y,
                       const LogTimeGrid& grid, int order) {
    TimeProfile p;
    p.grid = grid;
    p.weight_exponent = weight_exponent;
    p.values.resize(grid.nodes.size());
    MomentTable table;
    for (Eigen::Index j = 0; j < grid.nodes.size(); ++j) {
        const double t = grid.nodes[j];
        table.prepare(expansion.lambda(), t, x, y, order, expansion.dmax(), expansion.pmax());
        p.values[j] = expansion.evaluate(table, t, x, y).value;
    }
    Eigen::Index arg = 0;
    p.values.cwiseAbs().maxCoeff(&arg);
    p.peak_bracketed = arg > 0 && arg + 1 < p.values.size();
    return p;
}

}  // namespace

TimeProfile maximal_profile(const TypeIndex& lam, const Vec& x, const Vec& y, const LogTimeGrid& grid, int order) {
    require_half_space(x, lam.n(), "x");
    require_half_space(y, lam.n(), "y");
    require_off_diagonal(x, y);
    const int n = lam.n();
    return profile_of(cached_expansion(lam, zeros(n), zeros(n), 0), 0, x, y, grid, order);
}

TimeProfile g_kernel_profile(const TypeIndex& lam, const MultiIndex& m, int k, const Vec& x, const Vec& y,
                             const LogTimeGrid& grid, int order) {
    require_half_space(x, lam.n(), "x");
    require_half_space(y, lam.n(), "y");
    require_off_diagonal(x, y);
    const MultiIndex mm = or_zeros(m, lam.n());
    if (mm.sum() + k <= 0) throw DomainError("g kernel: need |m| + k > 0");
    return profile_of(cached_expansion(lam, mm, zeros(lam.n()), k), mm.sum() + 2.0 * k, x, y, grid, order);
}

// ---------------------------------------------------------------------------
// Scalar kernels

LaplaceSymbol LaplaceSymbol::constant(double c) { return {[c](double) { return c; }, std::abs(c)}; }

LaplaceSymbol LaplaceSymbol::exponential(double a) {
    if (!(a >= 0)) throw DomainError("LaplaceSymbol::exponential: rate must be nonnegative");
    return {[a](double t) { return std::exp(-a * t); }, 1.0};
}

namespace {

// -int psi(t) t d_t d^dx_x d^dy_y W_t dv.
OpValue laplace_component(const TypeIndex& lam, const LaplaceSymbol& psi, const MultiIndex& dx, const MultiIndex& dy,
                          const Vec& x, const Vec& y, int order) {
    const DerivativeExpansion& e = cached_expansion(lam, dx, dy, 1);
    auto g = [&](double v) {
        const double t = std::exp(v);
        const double p = psi.psi(t);
        if (p == 0) return 0.0;
        return -p * e.evaluate(t, x, y, order, v).value;
    };
    const auto [lo, hi] = kernel_window(x, y);
    return from_line(scaled_line_integral(g, lo, hi, 1e-10));
}

void check_kernel_args(const TypeIndex& lam, const Vec& x, const Vec& y) {
    require_half_space(x, lam.n(), "x");
    require_half_space(y, lam.n(), "y");
    require_off_diagonal(x, y);
}

}  // namespace

OpValue laplace_mult_kernel(const TypeIndex& lam, const LaplaceSymbol& psi, const Vec& x, const Vec& y, int order) {
    check_kernel_args(lam, x, y);
    const int n = lam.n();
    return laplace_component(lam, psi, zeros(n), zeros(n), x, y, order);
}

Vec laplace_mult_gradient(const TypeIndex& lam, const LaplaceSymbol& psi, const Vec& x, const Vec& y, int order) {
    check_kernel_args(lam, x, y);
    const int n = lam.n();
    Vec grad(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
        MultiIndex dx = zeros(n), dy = zeros(n);
        (i < n ? dx[i] : dy[i - n]) = 1;
        grad[i] = laplace_component(lam, psi, dx, dy, x, y, order).value;
    }
    return grad;
}

double StieltjesMeasure::total_variation() const {
    double s = 0;
    for (const auto& [t, w] : atoms) s += std::abs(w);
    return s;
}

namespace {

void check_measure(const StieltjesMeasure& nu) {
    for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
        if (!(nu.atoms[i].first > 0)) throw DomainError("StieltjesMeasure: atoms must sit at positive times");
        for (std::size_t j = 0; j < i; ++j)
            if (nu.atoms[j].first == nu.atoms[i].first) throw DomainError("StieltjesMeasure: atom times must be distinct");
    }
}

}  // namespace

std::complex<double> stieltjes_mult_kernel(const TypeIndex& lam, const StieltjesMeasure& nu, const Vec& x,
                                           const Vec& y, int order) {
    check_kernel_args(lam, x, y);
    check_measure(nu);
    std::complex<double> sum = 0;
    for (const auto& [t, w] : nu.atoms) sum += w * kernel_extended(lam, t, x, y, order);
    return sum;
}

Eigen::VectorXcd stieltjes_mult_gradient(const TypeIndex& lam, const StieltjesMeasure& nu, const Vec& x,
                                         const Vec& y, int order) {
    check_kernel_args(lam, x, y);
    check_measure(nu);
    const int n = lam.n();
    Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
        MultiIndex dx = zeros(n), dy = zeros(n);
        (i < n ? dx[i] : dy[i - n]) = 1;
        const DerivativeExpansion& e = cached_expansion(lam, dx, dy, 0);
        for (const auto& [t, w] : nu.atoms) grad[i] += w * e.evaluate(t, x, y, order).value;
    }
    return grad;
}

OpValue riesz_kernel_time(const TypeIndex& lam, const MultiIndex& m, const Vec& x, const Vec& y, int order,
                          const MultiIndex& dx, const MultiIndex& dy) {
    check_kernel_args(lam, x, y);
    const int n = lam.n();
    const MultiIndex mm = or_zeros(m, n);
    if (mm.sum() <= 0) throw DomainError("riesz kernel: need |m| > 0");
    const double half = mm.sum() / 2.0;
    const DerivativeExpansion& e = cached_expansion(lam, mm + or_zeros(dx, n), or_zeros(dy, n), 0);
    const double log_norm = -std::lgamma(half);
    auto g = [&](double v) { return e.evaluate(std::exp(v), x, y, order, half * v + log_norm).value; };
    // The tail is a power of t with corrections smaller by (|x|^2+|y|^2)/t;
    // a longer window makes the single-rate tail closure exact to rounding.
    const auto [lo, window_hi] = kernel_window(x, y);
    const double hi = window_hi + 10;
    OpValue out = from_line(scaled_line_integral(g, lo, hi, 1e-11));
    out.magnitude = abs_integral(g, lo, hi);
    return out;
}

OpValue riesz_kernel_closed(const TypeIndex& lam, const MultiIndex& m, const Vec& x, const Vec& y, int order,
                            const MultiIndex& dx, const MultiIndex& dy) {
    check_kernel_args(lam, x, y);
    const int n = lam.n();
    const MultiIndex mm = or_zeros(m, n);
    if (mm.sum() <= 0) throw DomainError("riesz kernel: need |m| > 0");
    const double half = mm.sum() / 2.0;
    const DerivativeExpansion& e = cached_expansion(lam, mm + or_zeros(dx, n), or_zeros(dy, n), 0);
    const std::vector<Eigen::VectorXi> eps_list = all_eps(n);
    const double D = (x - y).squaredNorm();
    const Vec b = (2 * x.array() * y.array()).matrix();
    const Vec log_x = x.array().log().matrix(), log_y = y.array().log().matrix();

    OpValue out;
    // int_0^inf t^{-B-1} e^{-q/4t} dt = Gamma(B) (q/4)^{-B}, B = -(tpow + |m|/2).
    struct Group {
        std::vector<int> spow;
        double exponent;
        double coeff;
    };
    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        const TermList& list = e.lists()[ei];
        const Eigen::VectorXi& eps = eps_list[ei];
        const double log_c = std::log(extended_constant(lam, eps)) - std::lgamma(half);
        std::map<std::pair<std::vector<int>, double>, double> groups;
        for (const auto& term : list.terms) {
            const double B = -(list.tpow(term) + half);
            if (!(B > 0)) {
                out.converged = false;
                continue;
            }
            double l = log_c + std::lgamma(B) + B * std::log(4.0);
            for (int i = 0; i < n; ++i) l += term.xpow[i] * log_x[i] + term.ypow[i] * log_y[i];
            std::vector<int> sp(term.spow.data(), term.spow.data() + n);
            groups[{sp, term.qpow - B}] += term.coeff * std::exp(l);
        }
        std::vector<Group> flat;
        for (const auto& [key, c] : groups) flat.push_back({key.first, key.second, c});

        std::vector<OmegaRule> rules;
        for (int i = 0; i < n; ++i) rules.push_back(omega_graded_rule(lam[i] + 1 + eps[i], order, D / b[i]));
        std::vector<Eigen::Index> idx(n, 0);
        double sum = 0, magnitude = 0;
        while (true) {
            double q = D, w = 1;
            for (int i = 0; i < n; ++i) {
                q += b[i] * rules[i].u[idx[i]];
                w *= rules[i].weights[idx[i]];
            }
            if (w != 0) {
                const double log_q = std::log(q);
                double local = 0, local_abs = 0;
                for (const Group& g : flat) {
                    double v = g.coeff * std::exp(g.exponent * log_q);
                    for (int i = 0; i < n; ++i)
                        if (g.spow[i]) v *= std::pow(rules[i].u[idx[i]] - 1, g.spow[i]);
                    local += v;
                    local_abs += std::abs(v);
                }
                sum += w * local;
                magnitude += std::abs(w) * local_abs;
            }
            int i = 0;
            while (i < n && ++idx[i] == rules[i].u.size()) idx[i++] = 0;
            if (i == n) break;
        }
        out.value += sum;
        out.magnitude += magnitude;
    }
    return out;
}

OpValue poisson_kernel(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order) {
    if (!(t > 0)) throw DomainError("poisson_kernel: t must be positive");
    require_half_space(x, lam.n(), "x");
    require_half_space(y, lam.n(), "y");
    const double inv_sqrt_pi = 1 / std::sqrt(std::numbers::pi);
    // u = e^v; du / sqrt(pi u) = e^{v/2} dv / sqrt(pi).
    auto g = [&](double v) {
        const double u = std::exp(v);
        if (u > 800) return 0.0;
        return kernel_extended(lam, t * t / (4 * u), x, y, order) * std::exp(v / 2 - u) * inv_sqrt_pi;
    };
    const double spread = x.squaredNorm() + y.squaredNorm() + t * t;
    const double v_lo = std::log(t * t / (4 * spread)) - 20;
    return from_line(scaled_line_integral(g, v_lo, std::log(60.0), 1e-10));
}

// ---------------------------------------------------------------------------
// Spectral multipliers

std::complex<double> multiplier_apply_spectral(const TypeIndex& lam, const Multiplier& M, const RadialGridFunction& f,
                                               const Vec& x) {
    require_half_space(x, lam.n(), "x");
    RadialGridFunction hf = hankel_transform_grid(lam, f);
    RadialGridFunction re = hf, im = hf;
    for (Eigen::Index k = 0; k < hf.values.size(); ++k) {
        const std::complex<double> mk = M(hf.grid.point(k).norm());
        re.values[k] = mk.real() * hf.values[k];
        im.values[k] = mk.imag() * hf.values[k];
    }
    const double r = hankel_transform(lam, re, x).value;
    const double i = im.values.cwiseAbs().maxCoeff() == 0 ? 0.0 : hankel_transform(lam, im, x).value;
    return {r, i};
}

namespace {

void require_one_dimensional(const TypeIndex& lam, const TestFunction& f, const TestFunction& g) {
    if (lam.n() != 1 || f.n != 1 || g.n != 1) throw DomainError("matrix elements are implemented for n = 1");
    for (const auto* h : {&f, &g})
        for (const auto& c : h->components)
            if (c.factors[0].constant) throw DomainError("matrix elements need decaying test functions");
}

}  // namespace

double multiplier_matrix_element_spectral(const TypeIndex& lam, const std::function<double(double)>& M,
                                          const TestFunction& f, const TestFunction& g) {
    require_one_dimensional(lam, f, g);
    double min_sigma = 1e300, reach = 0;
    for (const auto* h : {&f, &g})
        for (const auto& c : h->components) {
            min_sigma = std::min(min_sigma, c.factors[0].sigma);
            reach = std::max(reach, c.factors[0].center + 3 * c.factors[0].sigma);
        }
    // hf hg decays like exp(-sigma^2 z^2); oscillates with period 2 pi / reach.
    const double z_max = std::sqrt(2 * 40.0) / min_sigma;
    const double w = std::min(0.5, 1.0 / reach);
    std::vector<Feature> features;
    for (double c = 0; c < z_max; c += w) features.push_back({c, w});
    const GaussRule rule = feature_rule(features, z_max, 2 * lam[0], 16);
    double sum = 0;
    for (Eigen::Index k = 0; k < rule.size(); ++k) {
        const double z = rule.nodes[k];
        const Vec zv = scalar(z);
        sum += rule.weights[k] * M(z) * hankel_transform(lam, f, zv).value * hankel_transform(lam, g, zv).value;
    }
    return sum;
}

double laplace_matrix_element_kernel(const TypeIndex& lam, const LaplaceSymbol& psi, const TestFunction& f,
                                     const TestFunction& g) {
    require_one_dimensional(lam, f, g);
    // Gauss-Legendre over center +- 7 sigma (exp(-24.5) ~ 2e-11), weight y^{2 lambda}.
    auto rule_for = [&](const Factor& fac) {
        const double lo = std::max(0.0, fac.center - 7 * fac.sigma), hi = fac.center + 7 * fac.sigma;
        const std::vector<Feature> features{{fac.center, 7 * fac.sigma / 3}};
        return feature_rule(features, hi, 2 * lam[0], 8, lo);
    };
    double sum = 0;
    for (const auto& cf : f.components)
        for (const auto& cg : g.components) {
            const GaussRule ry = rule_for(cf.factors[0]), rx = rule_for(cg.factors[0]);
            for (Eigen::Index a = 0; a < rx.size(); ++a)
                for (Eigen::Index b = 0; b < ry.size(); ++b) {
                    const double weight = rx.weights[a] * ry.weights[b] * cg.coeff * cg.factors[0](rx.nodes[a]) *
                                          cf.coeff * cf.factors[0](ry.nodes[b]);
                    if (weight == 0) continue;
                    sum += weight * laplace_mult_kernel(lam, psi, scalar(rx.nodes[a]), scalar(ry.nodes[b])).value;
                }
        }
    return sum;
}

}  // namespace besselcz
