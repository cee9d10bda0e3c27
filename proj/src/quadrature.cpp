#include "besselcz/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <tuple>

#include "besselcz/errors.hpp"

namespace besselcz {

namespace {

// P_n^{(alpha,beta)}(x) by the three-term recurrence.
double jacobi_p(int n, double alpha, double beta, double x) {
    if (n == 0) return 1.0;
    double p_prev = 1.0;
    double p = (alpha + 1) + (alpha + beta + 2) * (x - 1) / 2;
    const double ab = alpha + beta;
    for (int k = 2; k <= n; ++k) {
        const double c = 2 * k + ab;
        const double a1 = 2 * k * (k + ab) * (c - 2);
        const double a2 = (c - 1) * (c * (c - 2) * x + alpha * alpha - beta * beta);
        const double a3 = 2 * (k + alpha - 1) * (k + beta - 1) * c;
        const double next = (a2 * p - a3 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    return p;
}

double jacobi_dp(int n, double alpha, double beta, double x) {
    if (n == 0) return 0.0;
    return (n + alpha + beta + 1) / 2 * jacobi_p(n - 1, alpha + 1, beta + 1, x);
}

GaussRule compute_jacobi_rule(double alpha, double beta, int n) {
    if (!(alpha > -1 && beta > -1)) throw DomainError("jacobi_rule: exponents must exceed -1");
    if (n < 1) throw DomainError("jacobi_rule: order must be >= 1");
    const double ab = alpha + beta;

    // Golub-Welsch starting values from the monic recurrence.
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    for (int k = 0; k < n; ++k) {
        if (k == 0)
            diag[k] = (beta - alpha) / (ab + 2);
        else
            diag[k] = (beta * beta - alpha * alpha) / ((2 * k + ab) * (2 * k + ab + 2));
    }
    for (int k = 1; k < n; ++k) {
        double b2;
        if (k == 1) {
            b2 = 4 * (1 + alpha) * (1 + beta) / ((2 + ab) * (2 + ab) * (3 + ab));
        } else {
            const double c = 2 * k + ab;
            b2 = 4 * k * (k + alpha) * (k + beta) * (k + ab) / (c * c * (c + 1) * (c - 1));
        }
        sub[k - 1] = std::sqrt(b2);
    }
    Eigen::VectorXd nodes(n);
    if (n == 1) {
        nodes[0] = diag[0];
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);
        nodes = solver.eigenvalues();
    }

    // Newton polish and weights from the derivative formula.
    const double log_c = (ab + 1) * std::log(2.0) + std::lgamma(n + alpha + 1) + std::lgamma(n + beta + 1) -
                         std::lgamma(n + ab + 1) - std::lgamma(n + 1.0);
    Eigen::VectorXd weights(n);
    for (int i = 0; i < n; ++i) {
        double x = nodes[i];
        for (int it = 0; it < 4; ++it) {
            const double dx = jacobi_p(n, alpha, beta, x) / jacobi_dp(n, alpha, beta, x);
            const double nx = x - dx;
            if (!(nx > -1 && nx < 1)) break;
            x = nx;
            if (std::abs(dx) < 1e-17) break;
        }
        nodes[i] = x;
        const double dp = jacobi_dp(n, alpha, beta, x);
        weights[i] = std::exp(log_c) / ((1 - x) * (1 + x) * dp * dp);
    }
    // Nodes close to +-1 lose relative accuracy in 1 - x^2; pin the zeroth moment.
    const double mass = std::exp((ab + 1) * std::log(2.0) + std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                                 std::lgamma(ab + 2));
    weights *= mass / weights.sum();
    if (alpha == beta) {
        for (int i = 0; i < n / 2; ++i) {
            const int j = n - 1 - i;
            const double x = (nodes[j] - nodes[i]) / 2;
            const double w = (weights[i] + weights[j]) / 2;
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = weights[j] = w;
        }
        if (n % 2) nodes[n / 2] = 0;
    }
    return {std::move(nodes), std::move(weights)};
}

// Rules are immutable once built; each thread keeps its own cache.
const GaussRule& cached_jacobi(double alpha, double beta, int n) {
    thread_local std::map<std::tuple<double, double, int>, GaussRule> cache;
    const auto key = std::make_tuple(alpha, beta, n);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, compute_jacobi_rule(alpha, beta, n)).first;
    return it->second;
}

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

OmegaRule atomic_rule() {
    OmegaRule r;
    r.u = Eigen::Vector2d(0.0, 2.0);
    r.weights = Eigen::Vector2d(kInvSqrt2Pi, kInvSqrt2Pi);
    return r;
}

const OmegaRule& full_interval_rule(double eta, int order) {
    thread_local std::map<std::pair<double, int>, OmegaRule> cache;
    const auto key = std::make_pair(eta, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const GaussRule& base = cached_jacobi(eta - 1, eta - 1, order);
    OmegaRule r;
    r.u = base.nodes.array() + 1.0;
    r.weights = base.weights / omega_normalizer(eta);
    return cache.emplace(key, std::move(r)).first->second;
}

}  // namespace

GaussRule jacobi_rule(double alpha, double beta, int order) { return cached_jacobi(alpha, beta, order); }

GaussRule legendre_rule(int order) { return cached_jacobi(0, 0, order); }

double omega_normalizer(double eta) {
    return std::sqrt(std::numbers::pi) * std::exp((eta - 0.5) * std::log(2.0) + std::lgamma(eta));
}

double omega_mass(double eta) {
    if (eta < 0) throw DomainError("omega_mass: eta must be >= 0");
    return std::exp(-(eta - 0.5) * std::log(2.0) - std::lgamma(eta + 0.5));
}

GegenbauerRule gegenbauer_rule(double eta, int order) {
    if (!(eta >= 0)) throw DomainError("gegenbauer_rule: eta must be >= 0");
    if (order < 1) throw DomainError("gegenbauer_rule: order must be >= 1");
    GegenbauerRule rule;
    rule.eta = eta;
    if (eta == 0) {
        rule.is_atomic = true;
        rule.nodes = Eigen::Vector2d(-1.0, 1.0);
        rule.weights = Eigen::Vector2d(kInvSqrt2Pi, kInvSqrt2Pi);
        return rule;
    }
    const GaussRule& base = cached_jacobi(eta - 1, eta - 1, order);
    rule.nodes = base.nodes;
    rule.weights = base.weights / omega_normalizer(eta);
    return rule;
}

OmegaRule omega_exp_rule(double eta, int order, double rate, int degree) {
    OmegaRule scratch;
    return omega_exp_rule_ref(eta, order, rate, degree, scratch);
}

const OmegaRule& omega_exp_rule_ref(double eta, int order, double rate, int degree, OmegaRule& r) {
    if (eta == 0) {
        static const OmegaRule atomic = atomic_rule();
        return atomic;
    }
    // Beyond u = cutoff / rate the neglected mass is Gamma(eta + degree, cutoff) relative.
    const double cutoff = 36 + 2 * (eta + degree);
    if (2 * rate <= cutoff) return full_interval_rule(eta, order);

    const double norm = omega_normalizer(eta);
    const double split = cutoff / rate;
    const GaussRule& head = cached_jacobi(0.0, eta - 1, order);
    const int tail_order = std::max(4, order / 4);
    const GaussRule& tail = cached_jacobi(eta - 1, 0.0, tail_order);

    r.u.resize(order + tail_order);
    r.weights.resize(order + tail_order);
    const double head_scale = std::pow(split / 2, eta) / norm;
    for (int i = 0; i < order; ++i) {
        const double u = split * (1 + head.nodes[i]) / 2;
        r.u[i] = u;
        r.weights[i] = head.weights[i] * head_scale * std::pow(2 - u, eta - 1);
    }
    const double half = (2 - split) / 2;
    const double tail_scale = std::pow(half, eta) / norm;
    for (int i = 0; i < tail_order; ++i) {
        const double u = split + half * (1 + tail.nodes[i]);
        r.u[order + i] = u;
        r.weights[order + i] = tail.weights[i] * tail_scale * std::pow(u, eta - 1);
    }
    return r;
}

OmegaRule omega_graded_rule(double eta, int order, double delta) {
    if (eta == 0) return atomic_rule();
    if (delta >= 0.5) return full_interval_rule(eta, order);
    delta = std::max(delta, 1e-300);

    const double norm = omega_normalizer(eta);
    std::vector<double> us, ws;
    // [0, delta] with the endpoint weight u^{eta-1}.
    {
        const GaussRule& head = cached_jacobi(0.0, eta - 1, order);
        const double scale = std::pow(delta / 2, eta) / norm;
        for (Eigen::Index i = 0; i < head.size(); ++i) {
            const double u = delta * (1 + head.nodes[i]) / 2;
            us.push_back(u);
            ws.push_back(head.weights[i] * scale * std::pow(2 - u, eta - 1));
        }
    }
    const GaussRule& gl = cached_jacobi(0.0, 0.0, order);
    double lo = delta;
    while (lo < 1) {
        const double hi = std::min(1.0, 4 * lo);
        const double half = (hi - lo) / 2;
        for (Eigen::Index i = 0; i < gl.size(); ++i) {
            const double u = lo + half * (1 + gl.nodes[i]);
            us.push_back(u);
            ws.push_back(gl.weights[i] * half * std::pow(u * (2 - u), eta - 1) / norm);
        }
        lo = hi;
    }
    // [1, 2] with the endpoint weight (2-u)^{eta-1}.
    {
        const GaussRule& tail = cached_jacobi(eta - 1, 0.0, order);
        const double scale = std::pow(0.5, eta) / norm;
        for (Eigen::Index i = 0; i < tail.size(); ++i) {
            const double u = 1 + (1 + tail.nodes[i]) / 2;
            us.push_back(u);
            ws.push_back(tail.weights[i] * scale * std::pow(u, eta - 1));
        }
    }
    OmegaRule r;
    r.u = Eigen::Map<Eigen::VectorXd>(us.data(), static_cast<Eigen::Index>(us.size()));
    r.weights = Eigen::Map<Eigen::VectorXd>(ws.data(), static_cast<Eigen::Index>(ws.size()));
    return r;
}

GaussRule composite_rule(double v_lo, double v_hi, double panel_width, int nodes_per_panel) {
    if (!(v_hi > v_lo)) throw DomainError("composite_rule: empty interval");
    const int panels = std::max(1, static_cast<int>(std::ceil((v_hi - v_lo) / panel_width - 1e-12)));
    const GaussRule& gl = cached_jacobi(0.0, 0.0, nodes_per_panel);
    const double h = (v_hi - v_lo) / panels;
    GaussRule r;
    r.nodes.resize(panels * nodes_per_panel);
    r.weights.resize(panels * nodes_per_panel);
    for (int p = 0; p < panels; ++p) {
        const double lo = v_lo + p * h;
        for (int i = 0; i < nodes_per_panel; ++i) {
            r.nodes[p * nodes_per_panel + i] = lo + h * (1 + gl.nodes[i]) / 2;
            r.weights[p * nodes_per_panel + i] = gl.weights[i] * h / 2;
        }
    }
    return r;
}

LogTimeGrid time_grid(double t_min, double t_max, int n) {
    if (!(t_min > 0 && t_max > t_min)) throw DomainError("time_grid: need 0 < t_min < t_max");
    if (n < 2) throw DomainError("time_grid: need at least 2 nodes");
    const int per_panel = std::min(n, 8);
    const int panels = (n + per_panel - 1) / per_panel;
    const double v_lo = std::log(t_min), v_hi = std::log(t_max);
    GaussRule v = composite_rule(v_lo, v_hi, (v_hi - v_lo) / panels, per_panel);
    LogTimeGrid grid;
    grid.t_min = t_min;
    grid.t_max = t_max;
    grid.nodes = v.nodes.array().exp();
    grid.weights = v.weights.cwiseProduct(grid.nodes);
    return grid;
}

namespace {

constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b, int& evals) {
    const double c = (a + b) / 2, h = (b - a) / 2;
    const double fc = f(c);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    double abs_sum = std::abs(kronrod);
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        f1[j] = f(c - dx);
        f2[j] = f(c + dx);
        kronrod += kWgk[j] * (f1[j] + f2[j]);
        abs_sum += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1[j] + f2[j]);
    }
    evals += 15;
    const double mean = kronrod / 2;
    double asc = std::abs(fc - mean) * kWgk[7];
    for (int j = 0; j < 7; ++j) asc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
    asc *= std::abs(h);
    double err = std::abs((kronrod - gauss) * h);
    if (asc != 0 && err != 0) err = asc * std::min(1.0, std::pow(200 * err / asc, 1.5));
    const double round = 50 * std::numeric_limits<double>::epsilon() * abs_sum * std::abs(h);
    if (round > err) err = round;
    return {a, b, kronrod * h, err};
}

template <class F>
QuadResult gk_adaptive(F& f, double a, double b, double abs_tol, double rel_tol, int max_intervals) {
    QuadResult res;
    std::priority_queue<Segment> queue;
    Segment first = gk15(f, a, b, res.evaluations);
    double total = first.value, err = first.error;
    queue.push(first);
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (static_cast<int>(queue.size()) >= max_intervals) {
            res.converged = false;
            break;
        }
        Segment s = queue.top();
        queue.pop();
        const double m = (s.a + s.b) / 2;
        if (!(m > s.a && m < s.b)) {
            res.converged = false;
            queue.push(s);
            break;
        }
        Segment l = gk15(f, s.a, m, res.evaluations);
        Segment r = gk15(f, m, s.b, res.evaluations);
        total += l.value + r.value - s.value;
        err += l.error + r.error - s.error;
        queue.push(l);
        queue.push(r);
    }
    // Re-sum to shed accumulated rounding from the running updates.
    double sum = 0, esum = 0;
    while (!queue.empty()) {
        sum += queue.top().value;
        esum += queue.top().error;
        queue.pop();
    }
    res.value = sum;
    res.error = esum;
    return res;
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                              SingularityHints hints, int max_intervals) {
    if (!(b > a)) throw DomainError("integrate_adaptive: need a < b");
    if (!(tol > 0)) throw DomainError("integrate_adaptive: tolerance must be positive");
    if (hints.left_exponent <= -1 || hints.right_exponent <= -1 || hints.left_exponent > 0 ||
        hints.right_exponent > 0)
        throw DomainError("integrate_adaptive: singularity exponents must lie in (-1, 0]");

    const bool infinite = std::isinf(b);
    // Split point: finite midpoint, or a + 1 for a half-line.
    const double mid = infinite ? a + 1 : (a + b) / 2;
    const double pl = 1 / (1 + hints.left_exponent);
    const double pr = 1 / (1 + hints.right_exponent);

    // Left piece: x = a + (mid - a) w^pl, w in [0,1].
    auto left = [&](double w) {
        if (w <= 0) return 0.0;
        const double x = a + (mid - a) * std::pow(w, pl);
        return f(x) * (mid - a) * pl * std::pow(w, pl - 1);
    };
    QuadResult lres = gk_adaptive(left, 0.0, 1.0, tol / 2, 0.0, max_intervals);

    QuadResult rres;
    if (infinite) {
        // x = mid + w / (1 - w), w in [0,1).
        auto right = [&](double w) {
            if (w >= 1) return 0.0;
            const double d = 1 - w;
            return f(mid + w / d) / (d * d);
        };
        rres = gk_adaptive(right, 0.0, 1.0, tol / 2, 0.0, max_intervals);
    } else {
        // x = b - (b - mid) w^pr.
        auto right = [&](double w) {
            if (w <= 0) return 0.0;
            const double x = b - (b - mid) * std::pow(w, pr);
            return f(x) * (b - mid) * pr * std::pow(w, pr - 1);
        };
        rres = gk_adaptive(right, 0.0, 1.0, tol / 2, 0.0, max_intervals);
    }
    QuadResult out;
    out.value = lres.value + rres.value;
    out.error = lres.error + rres.error;
    out.converged = lres.converged && rres.converged && out.error <= tol;
    out.evaluations = lres.evaluations + rres.evaluations;
    return out;
}

double tail_rate(double g_inner, double g_outer, double h) {
    if (g_outer == 0) return std::numeric_limits<double>::infinity();
    if (g_inner == 0) return 0;
    return std::log(std::abs(g_inner) / std::abs(g_outer)) / h;
}

LineResult integrate_line(const std::function<double(double)>& g, double v_lo, double v_hi, double rel_tol,
                          double abs_tol) {
    LineResult out;
    auto f = [&](double v) { return g(v); };
    QuadResult core = gk_adaptive(f, v_lo, v_hi, abs_tol, rel_tol, 4000);
    out.value = core.value;
    out.error = core.error;
    out.converged = core.converged;

    // Local decay rate from a one-sided second-order difference of log|g|;
    // the curvature of log|g| bounds the error of the exponential model.
    auto close_tail = [&](double edge, double dir) {
        const double h = 0.1;
        const double g0 = g(edge);
        if (g0 == 0) return std::pair<double, double>{0.0, 0.0};
        const double g1 = g(edge - dir * h);
        const double g2 = g(edge - 2 * dir * h);
        if (g1 == 0 || g2 == 0 || (g0 > 0) != (g1 > 0) || (g1 > 0) != (g2 > 0))
            return std::pair<double, double>{0.0, std::numeric_limits<double>::infinity()};
        const double p0 = std::log(std::abs(g0)), p1 = std::log(std::abs(g1)), p2 = std::log(std::abs(g2));
        const double rate = (p2 - 4 * p1 + 3 * p0) / (-2 * h);
        const double curvature = (p0 - 2 * p1 + p2) / (h * h);
        if (!(rate > 1e-3)) return std::pair<double, double>{0.0, std::numeric_limits<double>::infinity()};
        const double tail = g0 / rate;
        const double err = std::abs(tail) * (std::abs(curvature) / (rate * rate) + 1e-6);
        return std::pair<double, double>{tail, err};
    };
    const auto [hi_tail, hi_err] = close_tail(v_hi, 1.0);
    const auto [lo_tail, lo_err] = close_tail(v_lo, -1.0);
    out.tail = hi_tail + lo_tail;
    out.value += out.tail;
    out.error += hi_err + lo_err;
    if (!std::isfinite(out.error)) out.converged = false;
    return out;
}

GaussRule feature_rule(std::span<const Feature> features, double upper, double weight_exponent,
                       int nodes_per_panel, double lower) {
    if (!(upper > lower)) throw DomainError("feature_rule: empty interval");
    const double max_width = (upper - lower) / 8;
    auto step = [&](double z) {
        double h = max_width;
        for (const Feature& f : features) h = std::min(h, std::max(f.width, std::abs(z - f.center) / 4));
        return h;
    };
    std::vector<double> breaks{lower};
    double z = lower;
    while (z < upper) {
        double h = step(z);
        // Do not step across a feature centre with a coarse panel.
        for (const Feature& f : features)
            if (f.center > z && f.center < z + h && h > f.width) h = std::max(f.center - z, f.width);
        z = std::min(upper, z + h);
        if (upper - z < 1e-3 * h) z = upper;
        breaks.push_back(z);
    }

    const GaussRule& gl = cached_jacobi(0.0, 0.0, nodes_per_panel);
    const bool singular_start = lower == 0 && weight_exponent != 0;
    std::vector<double> nodes, weights;
    nodes.reserve(breaks.size() * nodes_per_panel);
    weights.reserve(breaks.size() * nodes_per_panel);
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double lo = breaks[p], hi = breaks[p + 1];
        const double half = (hi - lo) / 2;
        if (p == 0 && singular_start) {
            const GaussRule& head = cached_jacobi(0.0, weight_exponent, nodes_per_panel);
            const double scale = std::pow(half, weight_exponent + 1);
            for (Eigen::Index i = 0; i < head.size(); ++i) {
                nodes.push_back(lo + half * (1 + head.nodes[i]));
                weights.push_back(head.weights[i] * scale);
            }
            continue;
        }
        for (Eigen::Index i = 0; i < gl.size(); ++i) {
            const double y = lo + half * (1 + gl.nodes[i]);
            nodes.push_back(y);
            weights.push_back(gl.weights[i] * half * (weight_exponent == 0 ? 1.0 : std::pow(y, weight_exponent)));
        }
    }
    GaussRule r;
    r.nodes = Eigen::Map<Eigen::VectorXd>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
    r.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return r;
}

}  // namespace besselcz
