#include "besselcz/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace besselcz {

const char* to_string(Regime r) {
    switch (r) {
        case Regime::NearDiagonal: return "near-diagonal";
        case Regime::FarField: return "far-field";
        case Regime::NearBoundary: return "near-boundary";
        case Regime::Generic: return "generic";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-sample generator: the stream of sample i depends only on (seed, i).
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0)
        : g_(splitmix(seed ^ splitmix(index * 0x2545f4914f6cdd1dULL + stream))) {}

    double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * unit(); }
    double log_uniform(double a, double b) { return std::exp(std::log(a) + unit() * std::log(b / a)); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(g_() % n); }

    /// Uniform direction by rejection from the cube.
    Vec direction(int n) {
        Vec d(n);
        while (true) {
            for (int i = 0; i < n; ++i) d[i] = uniform(-1, 1);
            const double r = d.norm();
            if (r > 1e-3 && r <= 1) return d / r;
        }
    }

private:
    std::mt19937_64 g_;
};

template <class F>
void parallel_for(long count, int threads, F&& f) {
    threads = std::max(1, threads);
    if (threads == 1 || count < 2) {
        for (long i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (long i = w; i < count; i += threads) f(i);
        });
    for (auto& t : pool) t.join();
}

Vec point_near(Rng& rng, const Vec& x, double rho, int budget) {
    for (int attempt = 0; attempt < budget; ++attempt) {
        const Vec p = x + rho * rng.direction(static_cast<int>(x.size()));
        if ((p.array() > 0).all()) return p;
    }
    throw NumericalError("sample_configs: rejection budget exceeded");
}

std::string vec_str(const Vec& v) {
    std::ostringstream s;
    s.precision(6);
    s << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    s << ")";
    return s.str();
}

std::string ivec_str(const Eigen::VectorXi& v) {
    std::ostringstream s;
    s << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    s << ")";
    return s.str();
}

std::string describe(const SampleConfig& c) {
    std::string s = "lambda=" + vec_str(c.lam.values()) + " x=" + vec_str(c.x) + " y=" + vec_str(c.y);
    if (c.x_prime) s += " x'=" + vec_str(*c.x_prime);
    if (c.y_prime) s += " y'=" + vec_str(*c.y_prime);
    return s + " regime=" + to_string(c.regime);
}

double inv_v(const TypeIndex& lam, const Vec& x, double R) { return std::exp(-log_v_lambda(lam, x, R)); }

}  // namespace

// ---------------------------------------------------------------------------
// Sampling

std::vector<SampleConfig> sample_configs(const std::vector<TypeIndex>& lam_grid, int count, std::uint64_t seed,
                                         SampleOptions options) {
    if (count < 1) throw DomainError("sample_configs: count must be >= 1");
    if (lam_grid.empty()) throw DomainError("sample_configs: empty lambda grid");
    std::vector<SampleConfig> out(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        SampleConfig& c = out[i];
        c.lam = lam_grid[rng.index(lam_grid.size())];
        c.regime = static_cast<Regime>(i % 4);
        const int n = c.lam.n();
        c.x.resize(n);
        for (int j = 0; j < n; ++j) c.x[j] = rng.log_uniform(0.1, 10);
        double lo = 1e-1, hi = 1e1;
        switch (c.regime) {
            case Regime::NearDiagonal: lo = 1e-3, hi = 1e-1; break;
            case Regime::FarField: lo = 1e1, hi = 1e3; break;
            case Regime::NearBoundary:
                c.x[rng.index(n)] = rng.log_uniform(1e-4, 1);
                lo = 1e-3, hi = 1e1;
                break;
            case Regime::Generic: break;
        }
        const double r = rng.log_uniform(lo, hi) * c.x.norm();
        c.y = point_near(rng, c.x, r, options.rejection_budget);
        const double dist = (c.x - c.y).norm();
        if (options.x_prime) {
            Vec p;
            do p = point_near(rng, c.x, rng.log_uniform(1e-3, 0.49) * dist, options.rejection_budget);
            while (!(dist > 2 * (c.x - p).norm()));
            c.x_prime = p;
        }
        if (options.y_prime) {
            Vec p;
            do p = point_near(rng, c.y, rng.log_uniform(1e-3, 0.49) * dist, options.rejection_budget);
            while (!(dist > 2 * (c.y - p).norm()));
            c.y_prime = p;
        }
    }
    return out;
}

std::vector<TypeIndex> lambda_grid(const std::vector<int>& dims, const std::vector<double>& components) {
    std::vector<TypeIndex> out;
    for (int n : dims) {
        std::vector<std::size_t> idx(n, 0);
        while (true) {
            Vec v(n);
            for (int i = 0; i < n; ++i) v[i] = components[idx[i]];
            out.emplace_back(v);
            int i = 0;
            while (i < n && ++idx[i] == components.size()) idx[i++] = 0;
            if (i == n) break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

bool EstimateReport::finite() const { return std::isfinite(c_emp) && std::isfinite(c_min) && std::isfinite(drift); }

bool EstimateReport::passed() const {
    if (exact) return violations == 0;
    return finite() && drift < drift_limit && unconverged == 0;
}

std::string EstimateReport::to_json() const {
    nlohmann::json j;
    j["check_id"] = check_id;
    j["params"] = params;
    j["n_samples"] = n_samples;
    j["c_emp"] = c_emp;
    if (two_sided) j["c_min"] = c_min;
    j["argmax"] = argmax;
    j["argmax_sample"] = argmax_desc;
    if (!refined_argmax_desc.empty()) j["refined_argmax_sample"] = refined_argmax_desc;
    j["drift"] = drift;
    j["violations"] = violations;
    j["exact"] = exact;
    j["unconverged"] = unconverged;
    j["passed"] = passed();
    return j.dump();
}

std::string EstimateReport::csv_header() {
    return "check_id,params,n_samples,c_emp,c_min,drift,violations,exact,unconverged,passed";
}

std::string EstimateReport::to_csv() const {
    std::ostringstream s;
    s.precision(17);
    s << check_id << ",\"" << params << "\"," << n_samples << "," << c_emp << "," << c_min << "," << drift << ","
      << violations << "," << (exact ? 1 : 0) << "," << unconverged << "," << (passed() ? 1 : 0);
    return s.str();
}

namespace {

// Max (and min) of per-sample ratios for a base run and a refined run.
struct RatioSet {
    std::vector<double> values;
    std::vector<char> converged;
};

EstimateReport summarize(const std::string& id, const std::string& params, const RatioSet& base,
                         const RatioSet* fine, const std::vector<SampleConfig>* configs, bool two_sided,
                         const std::vector<SampleConfig>* fine_configs = nullptr) {
    EstimateReport r;
    r.check_id = id;
    r.params = params;
    r.two_sided = two_sided;
    r.n_samples = static_cast<long>(base.values.size());
    auto extremes = [](const RatioSet& s, long& argmax, long& bad) {
        double hi = -kInf, lo = kInf;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double v = s.values[i];
            if (!s.converged[i]) ++bad;
            if (std::isnan(v)) {
                hi = kInf;
                continue;
            }
            if (v > hi) {
                hi = v;
                argmax = static_cast<long>(i);
            }
            lo = std::min(lo, v);
        }
        return std::pair<double, double>{hi, lo};
    };
    long bad = 0, ignored = 0, arg_fine = -1;
    const auto [hi, lo] = extremes(base, r.argmax, bad);
    r.c_emp = hi;
    r.c_min = two_sided ? lo : 0;
    r.unconverged = bad;
    if (configs && r.argmax >= 0) r.argmax_desc = describe((*configs)[r.argmax]);
    if (fine) {
        const auto [fhi, flo] = extremes(*fine, arg_fine, ignored);
        if (fine_configs && arg_fine >= 0) r.refined_argmax_desc = describe((*fine_configs)[arg_fine]);
        r.unconverged += ignored;
        r.drift = r.c_emp > 0 ? std::abs(fhi - r.c_emp) / r.c_emp : (fhi > 0 ? kInf : 0);
        if (two_sided && lo > 0) r.drift = std::max(r.drift, std::abs(flo - lo) / lo);
        r.n_samples += static_cast<long>(fine->values.size());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Kernel evaluation for the standard estimates

int time_nodes(const Resolution& res) {
    const int raw = static_cast<int>(std::ceil(res.nodes_per_unit * std::log(1e12)));
    return (raw + 7) / 8 * 8;
}

// Maximum of |f| over a grid, refined by a parabola through log|f| at the
// discrete maximum and its neighbours.
double refined_sup(const Eigen::VectorXd& v_nodes, const Eigen::VectorXd& f) {
    Eigen::Index j = 0;
    const double top = f.cwiseAbs().maxCoeff(&j);
    if (top == 0 || j == 0 || j + 1 == f.size()) return top;
    const double a = std::abs(f[j - 1]), c = std::abs(f[j + 1]);
    if (a == 0 || c == 0 || (f[j - 1] > 0) != (f[j] > 0) || (f[j + 1] > 0) != (f[j] > 0)) return top;
    const double x0 = v_nodes[j - 1], x1 = v_nodes[j], x2 = v_nodes[j + 1];
    const double y0 = std::log(a), y1 = std::log(top), y2 = std::log(c);
    const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
    const double curv = (d12 - d01) / (x2 - x0);
    if (!(curv < 0)) return top;
    // Vertex of y0 + d01 (v - x0) + curv (v - x0)(v - x1).
    const double v_star = (x0 + x1) / 2 - d01 / (2 * curv);
    if (v_star < x0 || v_star > x2) return top;
    const double y_star = y0 + d01 * (v_star - x0) + curv * (v_star - x0) * (v_star - x1);
    return std::max(top, std::exp(y_star));
}

struct VectorNorm {
    LogTimeGrid grid;
    Eigen::VectorXd log_nodes;
    bool sup = true;
    double W = 0;

    double operator()(const Eigen::VectorXd& values) const {
        if (sup) return refined_sup(log_nodes, values);
        double s = 0;
        for (Eigen::Index j = 0; j < values.size(); ++j)
            s += grid.weights[j] * values[j] * values[j] * std::pow(grid.nodes[j], W - 1);
        return std::sqrt(s);
    }
};

Eigen::VectorXd profile_values(const DerivativeExpansion& e, const Vec& x, const Vec& y, const LogTimeGrid& grid,
                               int order) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.nodes.size());
    const double D = (x - y).squaredNorm();
    MomentTable table;
    for (Eigen::Index j = 0; j < grid.nodes.size(); ++j) {
        const double t = grid.nodes[j];
        if (D / (4 * t) > 745) continue;  // exp(-q/4t) underflows
        table.prepare(e.lambda(), t, x, y, order, e.dmax(), e.pmax());
        out[j] = e.evaluate(table, t, x, y).value;
    }
    return out;
}

MultiIndex padded(const std::vector<int>& m, int n) {
    MultiIndex out = MultiIndex::Zero(n);
    for (std::size_t i = 0; i < m.size() && static_cast<int>(i) < n; ++i) out[i] = m[i];
    return out;
}

StieltjesMeasure suite_measure() {
    StieltjesMeasure nu;
    nu.atoms = {{0.5, {1.0, 0.0}}, {2.0, {-0.5, 0.5}}};
    return nu;
}

// Integrals over v of several integrands on a fixed composite rule; the upper
// end is optionally closed by the local power law.
template <class F>
Eigen::VectorXd fixed_line(int count, F&& integrands, double lo, double hi, const Resolution& res, bool close_upper,
                           bool& ok) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(count), buf(count);
    if (!(hi > lo)) return sum;
    const GaussRule rule = composite_rule(lo, hi, 8.0 / res.nodes_per_unit, 8);
    for (Eigen::Index j = 0; j < rule.size(); ++j) {
        integrands(rule.nodes[j], buf);
        sum += rule.weights[j] * buf;
    }
    if (close_upper) {
        const double h = 0.25;
        Eigen::VectorXd g0(count), g1(count);
        integrands(hi, g0);
        integrands(hi - h, g1);
        for (int c = 0; c < count; ++c) {
            if (g0[c] == 0) continue;
            const double rate = std::log(std::abs(g1[c] / g0[c])) / h;
            if ((g0[c] > 0) != (g1[c] > 0) || !(rate > 1e-3)) {
                ok = false;
                continue;
            }
            sum[c] += g0[c] / rate;
        }
    }
    return sum;
}

struct SampleRatios {
    double gr = 0, sm1 = 0, sm2 = 0, grad = 0;
    bool converged = true;
};

SampleRatios evaluate_vector_kernel(const KernelSpec& spec, const SampleConfig& c, const Resolution& res,
                                    const EstimateMask& mask) {
    const int n = c.lam.n();
    const MultiIndex m = padded(spec.m, n);
    const int k = spec.kind == KernelKind::Maximal ? 0 : spec.k;
    const DerivativeExpansion& e = cached_expansion(c.lam, spec.kind == KernelKind::Maximal ? MultiIndex::Zero(n) : m,
                                                    MultiIndex::Zero(n), k);
    const double dist = (c.x - c.y).norm();
    VectorNorm norm;
    norm.grid = time_grid(1e-6 * dist * dist, 1e6 * dist * dist, time_nodes(res));
    norm.log_nodes = norm.grid.nodes.array().log().matrix();
    norm.sup = spec.kind == KernelKind::Maximal;
    norm.W = m.sum() + 2.0 * k;
    const double rhs = inv_v(c.lam, c.x, dist);
    const Eigen::VectorXd base = profile_values(e, c.x, c.y, norm.grid, res.omega_order);
    SampleRatios r;
    if (mask.growth) r.gr = norm(base) / rhs;
    if (mask.smooth_x && c.x_prime) {
        const double h = (c.x - *c.x_prime).norm();
        const Eigen::VectorXd other = profile_values(e, *c.x_prime, c.y, norm.grid, res.omega_order);
        r.sm1 = norm(base - other) / (h / dist * rhs);
    }
    if (mask.smooth_y && c.y_prime) {
        const double h = (c.y - *c.y_prime).norm();
        const Eigen::VectorXd other = profile_values(e, c.x, *c.y_prime, norm.grid, res.omega_order);
        r.sm2 = norm(base - other) / (h / dist * rhs);
    }
    return r;
}

// Scalar kernels: value at (x,y), at (x',y), at (x,y') and the 2n gradient
// entries, as complex numbers.
struct ScalarEval {
    std::complex<double> value, at_x_prime, at_y_prime;
    Eigen::VectorXcd gradient;
    bool converged = true;
};

// Time-integrated kernels: sum over expansions, each integrated against
// weight(t) t^{power} in v = log t.
ScalarEval scalar_time_kernel(const std::vector<const DerivativeExpansion*>& expansions, double power,
                              double log_norm, bool laplace, const Vec& x, const Vec& y, const Resolution& res) {
    ScalarEval out;
    const int count = static_cast<int>(expansions.size());
    int dmax = 0, pmax = 0;
    for (const auto* e : expansions) {
        dmax = std::max(dmax, e->dmax());
        pmax = std::max(pmax, e->pmax());
    }
    const TypeIndex& lam = expansions[0]->lambda();
    const double D = (x - y).squaredNorm();
    double lo = std::log(D / 200), hi = std::log(x.squaredNorm() + y.squaredNorm()) + 10;
    if (laplace) hi = std::min(hi, std::log(60.0));
    MomentTable table;
    auto integrands = [&](double v, Eigen::VectorXd& buf) {
        const double t = std::exp(v);
        table.prepare(lam, t, x, y, res.omega_order, dmax, pmax);
        const double extra = power * v + log_norm + (laplace ? -t : 0.0);
        for (int c = 0; c < count; ++c) buf[c] = expansions[c]->evaluate(table, t, x, y, extra).value;
    };
    bool ok = true;
    Eigen::VectorXd s = fixed_line(count, integrands, lo, hi, res, !laplace, ok);
    if (laplace) s = -s;
    out.converged = ok;
    out.value = s[0];
    out.gradient = s.tail(count - 1).cast<std::complex<double>>();
    return out;
}

ScalarEval evaluate_scalar_at(const KernelSpec& spec, const TypeIndex& lam, const Vec& x, const Vec& y,
                              const Resolution& res, bool with_gradient) {
    const int n = lam.n();
    const MultiIndex zero = MultiIndex::Zero(n);
    std::vector<std::pair<MultiIndex, MultiIndex>> derivs;  // (dx, dy) relative to the base pattern
    derivs.push_back({zero, zero});
    if (with_gradient)
        for (int i = 0; i < 2 * n; ++i) {
            MultiIndex dx = zero, dy = zero;
            (i < n ? dx[i] : dy[i - n]) = 1;
            derivs.push_back({dx, dy});
        }
    if (spec.kind == KernelKind::Stieltjes) {
        ScalarEval out;
        const StieltjesMeasure nu = suite_measure();
        Eigen::VectorXcd vals = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(derivs.size()));
        for (std::size_t d = 0; d < derivs.size(); ++d) {
            const DerivativeExpansion& e = cached_expansion(lam, derivs[d].first, derivs[d].second, 0);
            MomentTable table;
            for (const auto& [t, w] : nu.atoms) {
                table.prepare(lam, t, x, y, res.omega_order, e.dmax(), e.pmax());
                vals[d] += w * e.evaluate(table, t, x, y).value;
            }
        }
        out.value = vals[0];
        out.gradient = vals.tail(vals.size() - 1);
        return out;
    }
    std::vector<const DerivativeExpansion*> exps;
    if (spec.kind == KernelKind::Laplace) {
        for (const auto& [dx, dy] : derivs) exps.push_back(&cached_expansion(lam, dx, dy, 1));
        return scalar_time_kernel(exps, 1.0, 0.0, true, x, y, res);
    }
    const MultiIndex m = padded(spec.m, n);
    const double half = m.sum() / 2.0;
    for (const auto& [dx, dy] : derivs) exps.push_back(&cached_expansion(lam, m + dx, dy, 0));
    return scalar_time_kernel(exps, half, -std::lgamma(half), false, x, y, res);
}

SampleRatios evaluate_scalar_kernel(const KernelSpec& spec, const SampleConfig& c, const Resolution& res,
                                    const EstimateMask& mask) {
    const double dist = (c.x - c.y).norm();
    const double rhs = inv_v(c.lam, c.x, dist);
    SampleRatios r;
    const ScalarEval base = evaluate_scalar_at(spec, c.lam, c.x, c.y, res, mask.gradient);
    r.converged = base.converged;
    if (mask.growth) r.gr = std::abs(base.value) / rhs;
    if (mask.gradient) r.grad = base.gradient.norm() / (rhs / dist);
    if (mask.smooth_x && c.x_prime) {
        const ScalarEval o = evaluate_scalar_at(spec, c.lam, *c.x_prime, c.y, res, false);
        r.converged &= o.converged;
        r.sm1 = std::abs(base.value - o.value) / ((c.x - *c.x_prime).norm() / dist * rhs);
    }
    if (mask.smooth_y && c.y_prime) {
        const ScalarEval o = evaluate_scalar_at(spec, c.lam, c.x, *c.y_prime, res, false);
        r.converged &= o.converged;
        r.sm2 = std::abs(base.value - o.value) / ((c.y - *c.y_prime).norm() / dist * rhs);
    }
    return r;
}

std::vector<TypeIndex> grid_for(const KernelSpec& spec, const VerifyOptions& o) {
    // A pattern touching coordinate i needs n > i.
    int min_n = 1;
    for (std::size_t i = 0; i < spec.m.size(); ++i)
        if (spec.m[i] != 0) min_n = std::max(min_n, static_cast<int>(i) + 1);
    std::vector<int> dims;
    for (int n : o.dims)
        if (n >= min_n) dims.push_back(n);
    if (dims.empty()) throw DomainError("kernel pattern " + spec.id() + " needs a larger dimension");
    return lambda_grid(dims, o.lambda_components);
}

// The union of the sampling regimes.
bool admissible(const SampleConfig& c) {
    if (!((c.x.array() >= 1e-4).all() && (c.x.array() <= 10).all() && (c.y.array() > 0).all())) return false;
    const double r = (c.x - c.y).norm(), size = c.x.norm();
    if (!(r >= 1e-3 * size && r <= 1e3 * size)) return false;
    auto near = [&](const std::optional<Vec>& p, const Vec& centre) {
        if (!p) return true;
        const double rho = (*p - centre).norm();
        return (p->array() > 0).all() && rho >= 1e-3 * r * (1 - 1e-12) && rho <= 0.49 * r * (1 + 1e-12);
    };
    return near(c.x_prime, c.x) && near(c.y_prime, c.y);
}

// Log coordinates of x and y; a primed point is stored relative to its centre
// as log(rho/r) and a direction, so that it follows moves of x and y.
struct Packing {
    bool x_prime = false, y_prime = false;

    Vec pack(const SampleConfig& c) const {
        std::vector<double> v;
        auto put = [&](const Vec& p) {
            for (Eigen::Index i = 0; i < p.size(); ++i) v.push_back(std::log(p[i]));
        };
        const double r = (c.x - c.y).norm();
        auto put_relative = [&](const Vec& p, const Vec& centre) {
            const Vec d = p - centre;
            v.push_back(std::log(d.norm() / r));
            for (Eigen::Index i = 0; i < d.size(); ++i) v.push_back(d[i] / d.norm());
        };
        put(c.x);
        put(c.y);
        if (x_prime) put_relative(*c.x_prime, c.x);
        if (y_prime) put_relative(*c.y_prime, c.y);
        return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    SampleConfig unpack(const SampleConfig& like, const Vec& v) const {
        SampleConfig c = like;
        const int n = c.lam.n();
        Eigen::Index at = 0;
        auto take = [&](Vec& p) {
            p = v.segment(at, n).array().exp().matrix();
            at += n;
        };
        take(c.x);
        take(c.y);
        c.x = c.x.cwiseMax(1e-4).cwiseMin(10);
        const double r = (c.x - c.y).norm();
        auto take_relative = [&](std::optional<Vec>& p, const Vec& centre) {
            const double rho = r * std::exp(std::min(v[at], std::log(0.49)));
            const Vec d = v.segment(at + 1, n);
            at += n + 1;
            p = centre + rho * d / d.norm();
        };
        if (x_prime) take_relative(c.x_prime, c.x);
        else c.x_prime.reset();
        if (y_prime) take_relative(c.y_prime, c.y);
        else c.y_prime.reset();
        return c;
    }
};

struct Found {
    SampleConfig config;
    double value = 0;
    bool converged = true;
};

using RatioFn = std::function<std::pair<double, bool>(const SampleConfig&)>;

// Compass search on log coordinates, inside the sampling domain. Besides the
// coordinate axes it moves along the scale directions of x, y and (x, y). When
// stuck it tries putting a primed point on a coordinate direction from its
// centre, then the neighbouring lambda of the grid, before shrinking the step.
Found climb(const SampleConfig& start, double value, const RatioFn& ratio, const Packing& packing,
            const std::vector<TypeIndex>& lams) {
    constexpr int kBudget = 300;
    const int n = start.lam.n();
    Vec p = packing.pack(start);
    std::vector<Vec> dirs;
    for (Eigen::Index d = 0; d < p.size(); ++d) dirs.push_back(Vec::Unit(p.size(), d));
    for (int which = 0; which < 3; ++which) {
        Vec d = Vec::Zero(p.size());
        if (which != 1) d.head(n).setOnes();
        if (which != 0) d.segment(n, n).setOnes();
        dirs.push_back(d);
    }
    std::vector<TypeIndex> neighbours;
    for (const TypeIndex& l : lams)
        if (l.n() == n && ((l.values() - start.lam.values()).array() != 0).count() == 1) neighbours.push_back(l);

    Found best{start, value, true};
    double step = 0.5;
    int evals = 0;
    auto try_point = [&](const SampleConfig& like, const Vec& q) -> bool {
        const SampleConfig c = packing.unpack(like, q);
        if (!admissible(c)) return false;
        const auto [v, ok] = ratio(c);
        ++evals;
        if (!(v > best.value * (1 + 1e-9))) return false;
        best = {c, v, ok};
        p = packing.pack(c);
        return true;
    };
    while (step > 2e-3 && evals < kBudget) {
        bool moved = false;
        for (std::size_t d = 0; d < dirs.size() && evals < kBudget && !moved; ++d)
            for (double sign : {1.0, -1.0}) {
                if (!try_point(best.config, p + sign * step * dirs[d])) continue;
                moved = true;
                // Keep going along a successful direction with growing steps.
                for (double stride = 2 * step; evals < kBudget; stride *= 2)
                    if (!try_point(best.config, p + sign * stride * dirs[d])) break;
                break;
            }
        // Primed points may also jump to a coordinate direction from their centre.
        for (int block = 0; block < (packing.x_prime ? 1 : 0) + (packing.y_prime ? 1 : 0) && !moved; ++block) {
            const Eigen::Index at = 2 * n + block * (n + 1) + 1;
            for (int i = 0; i < 2 * n && evals < kBudget && !moved; ++i) {
                Vec q = p;
                q.segment(at, n) = (i < n ? 1.0 : -1.0) * Vec::Unit(n, i % n);
                if ((q.segment(at, n) - p.segment(at, n) / p.segment(at, n).norm()).norm() < 1e-12) continue;
                moved = try_point(best.config, q);
            }
        }
        if (!moved) {
            const TypeIndex current = best.config.lam;
            for (const TypeIndex& l : neighbours) {
                if (evals >= kBudget) break;
                if (((l.values() - current.values()).array() != 0).count() != 1) continue;
                SampleConfig like = best.config;
                like.lam = l;
                if (try_point(like, p)) moved = true;
            }
        }
        if (!moved) step /= 2;
    }
    return best;
}

// Local search from the largest samples and from `seeds`; the points found are
// appended to the sample set.
std::vector<Found> refine_maximum(RatioSet& set, std::vector<SampleConfig>& configs, const std::vector<Found>& seeds,
                                  const RatioFn& ratio, const Packing& packing, const std::vector<TypeIndex>& lams,
                                  int threads) {
    constexpr std::size_t kStarts = 8;
    std::vector<std::size_t> order(set.values.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) { return std::isfinite(set.values[i]) ? set.values[i] : -kInf; };
    const std::size_t top = std::min(kStarts, order.size());
    std::partial_sort(order.begin(), order.begin() + top, order.end(),
                      [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    std::vector<Found> starts;
    for (std::size_t i = 0; i < top; ++i)
        if (key(order[i]) > 0) starts.push_back({configs[order[i]], set.values[order[i]], true});
    for (const Found& s : seeds) {
        const auto [v, ok] = ratio(s.config);
        starts.push_back({s.config, v, ok});
    }
    std::vector<Found> found(starts.size());
    parallel_for(static_cast<long>(starts.size()), threads,
                 [&](long i) { found[i] = climb(starts[i].config, starts[i].value, ratio, packing, lams); });
    // Restart from the best point while that still helps.
    if (!found.empty()) {
        auto best = std::max_element(found.begin(), found.end(),
                                     [](const Found& a, const Found& b) { return a.value < b.value; });
        Found current = *best;
        for (int round = 0; round < 3; ++round) {
            const Found next = climb(current.config, current.value, ratio, packing, lams);
            if (!(next.value > current.value * (1 + 1e-6))) break;
            current = next;
        }
        found.push_back(current);
    }
    for (const Found& f : found) {
        set.values.push_back(f.value);
        set.converged.push_back(f.converged);
        configs.push_back(f.config);
    }
    return found;
}

// The same for the minimum, searching the reciprocal.
std::vector<Found> refine_minimum(RatioSet& set, std::vector<SampleConfig>& configs, const std::vector<Found>& seeds,
                                  const RatioFn& ratio, const Packing& packing, const std::vector<TypeIndex>& lams,
                                  int threads) {
    RatioSet inv = set;
    for (double& v : inv.values) v = 1 / v;
    std::vector<SampleConfig> cfg = configs;
    const RatioFn inverse = [&](const SampleConfig& c) {
        const auto [v, ok] = ratio(c);
        return std::pair<double, bool>{1 / v, ok};
    };
    std::vector<Found> inv_seeds = seeds;
    const auto found = refine_maximum(inv, cfg, inv_seeds, inverse, packing, lams, threads);
    for (const Found& f : found) {
        set.values.push_back(1 / f.value);
        set.converged.push_back(f.converged);
        configs.push_back(f.config);
    }
    return found;
}

// Base and refined sample sets, each followed by the local search; optima of
// the base run seed the refined one.
struct RefinedPair {
    RatioSet base, fine;
    std::vector<SampleConfig> base_cfg, fine_cfg;
};

void refine_pair(RefinedPair& p, bool refine, const std::function<RatioFn(bool fine)>& ratio, const Packing& packing,
                 const std::vector<TypeIndex>& lams, int threads, bool two_sided) {
    const auto b_max = refine_maximum(p.base, p.base_cfg, {}, ratio(false), packing, lams, threads);
    std::vector<Found> b_min;
    if (two_sided) b_min = refine_minimum(p.base, p.base_cfg, {}, ratio(false), packing, lams, threads);
    if (!refine) return;
    refine_maximum(p.fine, p.fine_cfg, b_max, ratio(true), packing, lams, threads);
    if (two_sided) refine_minimum(p.fine, p.fine_cfg, b_min, ratio(true), packing, lams, threads);
}

// Compass search over a plain parameter vector, for checks whose samples carry
// more than a SampleConfig. `f` returns -inf outside the domain.
Vec climb_vector(Vec p, double value, const std::function<double(const Vec&)>& f, double& best, int budget = 300) {
    const int kBudget = budget;
    best = value;
    double step = 0.5;
    int evals = 0;
    auto try_point = [&](const Vec& q) {
        const double v = f(q);
        ++evals;
        if (!(v > best * (1 + 1e-9))) return false;
        best = v;
        p = q;
        return true;
    };
    while (step > 2e-3 && evals < kBudget) {
        bool moved = false;
        for (Eigen::Index d = 0; d < p.size() && evals < kBudget && !moved; ++d)
            for (double sign : {1.0, -1.0}) {
                if (!try_point(p + sign * step * Vec::Unit(p.size(), d))) continue;
                moved = true;
                for (double stride = 2 * step; evals < kBudget; stride *= 2)
                    if (!try_point(p + sign * stride * Vec::Unit(p.size(), d))) break;
                break;
            }
        if (!moved) step /= 2;
    }
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Standard estimates

std::string KernelSpec::id() const {
    auto pattern = [&] {
        std::string s = "(";
        for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "," : "") + std::to_string(m[i]);
        return s + ")";
    };
    switch (kind) {
        case KernelKind::Maximal: return "W";
        case KernelKind::G: return "G" + pattern() + ",k=" + std::to_string(k);
        case KernelKind::Laplace: return "Kpsi[exp(-t)]";
        case KernelKind::Stieltjes: return "Knu[2 atoms]";
        case KernelKind::Riesz: return "R" + pattern();
    }
    return "?";
}

std::vector<KernelSpec> KernelSpec::standard_suite() {
    return {
        {KernelKind::Maximal, {}, 0},
        {KernelKind::G, {1}, 0},
        {KernelKind::G, {}, 1},
        {KernelKind::G, {1}, 1},
        {KernelKind::Laplace, {}, 0},
        {KernelKind::Stieltjes, {}, 0},
        {KernelKind::Riesz, {1}, 0},
        {KernelKind::Riesz, {2}, 0},
        {KernelKind::Riesz, {1, 1}, 0},
    };
}

std::vector<EstimateReport> check_standard(const KernelSpec& kernel, const VerifyOptions& options, EstimateMask mask) {
    if (kernel.kind == KernelKind::G && std::accumulate(kernel.m.begin(), kernel.m.end(), 0) + kernel.k <= 0)
        throw DomainError("G kernel needs |m| + k > 0");
    if (kernel.kind == KernelKind::Riesz && std::accumulate(kernel.m.begin(), kernel.m.end(), 0) <= 0)
        throw DomainError("Riesz kernel needs |m| > 0");
    if (kernel.vector_valued()) mask.gradient = false;
    const std::vector<TypeIndex> grid = grid_for(kernel, options);
    SampleOptions so;
    so.x_prime = mask.smooth_x;
    so.y_prime = mask.smooth_y;

    auto evaluate = [&](const SampleConfig& c, const Resolution& res, const EstimateMask& m) {
        return kernel.vector_valued() ? evaluate_vector_kernel(kernel, c, res, m)
                                      : evaluate_scalar_kernel(kernel, c, res, m);
    };
    auto run = [&](int count, const Resolution& res, std::vector<SampleConfig>& configs) {
        configs = sample_configs(grid, count, options.seed, so);
        std::vector<SampleRatios> out(count);
        parallel_for(count, options.threads, [&](long i) { out[i] = evaluate(configs[i], res, mask); });
        return out;
    };
    std::vector<SampleConfig> base_cfg, fine_cfg;
    const auto base = run(options.samples, options.base, base_cfg);
    std::vector<SampleRatios> fine;
    if (options.refine) fine = run(4 * options.samples, options.base.doubled(), fine_cfg);

    std::vector<EstimateReport> reports;
    auto add = [&](const char* id, double SampleRatios::*field, EstimateMask single) {
        auto ratio = [&](const Resolution& res) {
            return [&, res](const SampleConfig& c) {
                const SampleRatios r = evaluate(c, res, single);
                return std::pair<double, bool>{r.*field, r.converged};
            };
        };
        auto to_set = [&](const std::vector<SampleRatios>& v) {
            RatioSet set;
            for (const auto& r : v) {
                set.values.push_back(r.*field);
                set.converged.push_back(r.converged);
            }
            return set;
        };
        const Packing packing{single.smooth_x, single.smooth_y};
        RatioSet b = to_set(base);
        std::vector<SampleConfig> b_cfg = base_cfg;
        const auto b_found = refine_maximum(b, b_cfg, {}, ratio(options.base), packing, grid, options.threads);
        if (!options.refine) {
            reports.push_back(summarize(id, kernel.id(), b, nullptr, &b_cfg, false));
        } else {
            RatioSet f = to_set(fine);
            std::vector<SampleConfig> f_cfg = fine_cfg;
            refine_maximum(f, f_cfg, b_found, ratio(options.base.doubled()), packing, grid, options.threads);
            reports.push_back(summarize(id, kernel.id(), b, &f, &b_cfg, false, &f_cfg));
        }
        reports.back().n_samples = options.samples * (options.refine ? 5 : 1);
    };
    if (mask.growth) add("growth", &SampleRatios::gr, {true, false, false, false});
    if (mask.smooth_x) add("smoothness_x", &SampleRatios::sm1, {false, true, false, false});
    if (mask.smooth_y) add("smoothness_y", &SampleRatios::sm2, {false, false, true, false});
    if (mask.gradient) add("gradient", &SampleRatios::grad, {false, false, false, true});
    return reports;
}

EstimateReport check_growth(const KernelSpec& kernel, const VerifyOptions& options) {
    return check_standard(kernel, options, {true, false, false, false}).front();
}

EstimateReport check_smoothness_x(const KernelSpec& kernel, const VerifyOptions& options) {
    return check_standard(kernel, options, {false, true, false, false}).front();
}

EstimateReport check_smoothness_y(const KernelSpec& kernel, const VerifyOptions& options) {
    return check_standard(kernel, options, {false, false, true, false}).front();
}

EstimateReport check_gradient(const KernelSpec& kernel, const VerifyOptions& options) {
    if (kernel.vector_valued()) throw DomainError("gradient estimate applies to scalar kernels");
    return check_standard(kernel, options, {false, false, false, true}).front();
}

// ---------------------------------------------------------------------------
// Bridge lemma

namespace {

// int q^expo dOmega_eta over [-1,1]^n, q = D + sum b_i u_i, by tensor graded rules.
double omega_power_integral(const Vec& etas, double D, const Vec& b, double expo, int order) {
    const int n = static_cast<int>(etas.size());
    std::vector<OmegaRule> rules;
    for (int i = 0; i < n; ++i) rules.push_back(omega_graded_rule(etas[i], order, D / b[i]));
    std::vector<Eigen::Index> idx(n, 0);
    double sum = 0;
    while (true) {
        double q = D, w = 1;
        for (int i = 0; i < n; ++i) {
            q += b[i] * rules[i].u[idx[i]];
            w *= rules[i].weights[idx[i]];
        }
        sum += w * std::exp(expo * std::log(q));
        int i = 0;
        while (i < n && ++idx[i] == rules[i].u.size()) idx[i++] = 0;
        if (i == n) break;
    }
    return sum;
}

std::vector<Eigen::VectorXi> theta_choices(const Eigen::VectorXi& eps) {
    const int n = static_cast<int>(eps.size());
    std::vector<Eigen::VectorXi> out{Eigen::VectorXi::Zero(n)};
    if (eps.sum() > 0) {
        out.push_back(eps);
        out.push_back(2 * eps);
    }
    return out;
}

}  // namespace

std::string BridgeParams::describe() const { return "xi=" + vec_str(xi) + " kappa=" + vec_str(kappa); }

std::vector<BridgeParams> bridge_suite(int n) {
    std::vector<BridgeParams> out;
    out.push_back({Vec::Zero(n), Vec::Zero(n)});
    for (const auto& eps : all_eps(n))
        for (const auto& theta : theta_choices(eps))
            for (const auto& rho : theta_choices(eps)) {
                const Vec e = eps.cast<double>(), th = theta.cast<double>(), rh = rho.cast<double>();
                out.push_back({2 * e - th / 2 - rh / 2, Vec::Ones(n) - e + th / 2 + rh / 2});
            }
    return out;
}

EstimateReport check_bridge(const BridgeParams& params, const VerifyOptions& options) {
    const int n = static_cast<int>(params.xi.size());
    std::vector<TypeIndex> grid;
    for (const auto& lam : lambda_grid({n}, options.lambda_components))
        if (((lam.values() + params.xi + params.kappa).array() >= 0).all()) grid.push_back(lam);
    if (grid.empty()) throw DomainError("check_bridge: no lambda satisfies lambda + xi + kappa >= 0");

    auto ratio = [&](const SampleConfig& c, const Resolution& res) {
        const double D = (c.x - c.y).squaredNorm();
        const Vec b = (2 * c.x.array() * c.y.array()).matrix();
        const Vec etas = c.lam.values() + params.xi + params.kappa;
        const double expo = -n / 2.0 - c.lam.abs() - params.xi.sum();
        double lhs = omega_power_integral(etas, D, b, expo, res.omega_order);
        for (int j = 0; j < n; ++j) lhs *= std::pow(c.x[j] + c.y[j], 2 * params.xi[j]);
        return lhs / inv_v(c.lam, c.x, std::sqrt(D));
    };
    auto run = [&](int count, const Resolution& res, RatioSet& s, std::vector<SampleConfig>& configs) {
        configs = sample_configs(grid, count, options.seed ^ 0xb41d9e);
        s.values.resize(count);
        s.converged.assign(count, 1);
        parallel_for(count, options.threads, [&](long i) { s.values[i] = ratio(configs[i], res); });
    };
    RefinedPair p;
    run(options.samples, options.base, p.base, p.base_cfg);
    if (options.refine) run(4 * options.samples, options.base.doubled(), p.fine, p.fine_cfg);
    refine_pair(
        p, options.refine,
        [&](bool fine) -> RatioFn {
            const Resolution res = fine ? options.base.doubled() : options.base;
            return [&, res](const SampleConfig& c) { return std::pair<double, bool>{ratio(c, res), true}; };
        },
        Packing{}, grid, options.threads, false);
    EstimateReport r = summarize("bridge", params.describe(), p.base, options.refine ? &p.fine : nullptr, &p.base_cfg,
                                 false, &p.fine_cfg);
    r.n_samples = options.samples * (options.refine ? 5 : 1);
    return r;
}

// ---------------------------------------------------------------------------
// Upsilon lemma

std::string UpsilonParams::describe() const {
    std::ostringstream s;
    s << "eps=" << ivec_str(eps) << " theta=" << ivec_str(theta) << " rho=" << ivec_str(rho) << " u=" << u
      << " p=" << (std::isinf(p) ? std::string("inf") : std::to_string(static_cast<int>(p))) << " W=" << W
      << " C=1/" << std::lround(1 / C);
    return s.str();
}

std::vector<UpsilonParams> upsilon_suite(int n) {
    struct Shape {
        double u, p, W, C;
    };
    const std::vector<Shape> shapes{{0, kInf, 1, 1.0 / 4},  {1, kInf, 1, 1.0 / 128}, {0, 2, 2, 1.0 / 8},
                                    {1, 2, 2, 1.0 / 128},   {0, 1, 1, 1.0 / 8},      {1, 1, 1, 1.0 / 8}};
    std::vector<UpsilonParams> out;
    for (const auto& eps : all_eps(n))
        for (const auto& theta : theta_choices(eps))
            for (const auto& rho : theta_choices(eps)) {
                if (theta != rho && !(theta.sum() == 0 || rho.sum() == 0)) continue;
                for (const Shape& s : shapes) out.push_back({eps, theta, rho, s.u, s.p, s.W, s.C});
            }
    return out;
}

std::vector<EstimateReport> check_upsilon(const std::vector<UpsilonParams>& params, const VerifyOptions& options) {
    if (params.empty()) return {};
    const int n = static_cast<int>(params[0].eps.size());
    for (const auto& p : params) {
        if (p.eps.size() != n || p.theta.size() != n || p.rho.size() != n)
            throw DomainError("check_upsilon: inconsistent dimensions");
        if ((p.theta.array() > 2 * p.eps.array()).any() || (p.rho.array() > 2 * p.eps.array()).any())
            throw DomainError("check_upsilon: need theta <= 2 eps and rho <= 2 eps");
        if (!(p.u >= 0) || !(p.C > 0) || !(p.p == 1 || p.p == 2 || std::isinf(p.p)))
            throw DomainError("check_upsilon: need u >= 0, C > 0, p in {1, 2, inf}");
    }
    std::vector<double> Cs;
    for (const auto& p : params)
        if (std::find(Cs.begin(), Cs.end(), p.C) == Cs.end()) Cs.push_back(p.C);
    const double c_min = *std::min_element(Cs.begin(), Cs.end());
    const std::vector<TypeIndex> grid = lambda_grid({n}, options.lambda_components);

    // Ratios of the parameter tuples listed in `which` at one configuration.
    auto values = [&](const SampleConfig& c, const Resolution& res, const std::vector<std::size_t>& which) {
        std::vector<double> out(which.size());
        auto needs = [&](double C) {
            for (std::size_t k : which)
                if (params[k].C == C) return true;
            return false;
        };
        const TypeIndex& lam = c.lam;
        const double D = (c.x - c.y).squaredNorm();
        const double spread = std::pow(c.x.norm() + c.y.norm(), 2);
        const double lo = std::log(c_min * D / 60), hi = std::log(1e4 * spread);
        const GaussRule rule = composite_rule(lo, hi, 8.0 / res.nodes_per_unit, 8);
        const Eigen::Index N = rule.size();
        // log of int exp(-C q/t) dOmega_{lambda+1+eps} per (C, eps, node).
        std::map<std::pair<double, int>, Eigen::VectorXd> log_omega;
        MomentTable table;
        for (double C : Cs) {
            if (!needs(C)) continue;
            std::vector<Eigen::VectorXd> per_eps(1 << n, Eigen::VectorXd(N + 1));
            for (Eigen::Index j = 0; j <= N; ++j) {
                const double t = std::exp(j < N ? rule.nodes[j] : hi);
                table.prepare(lam, t, c.x, c.y, res.omega_order, 0, 0, 4 * C);
                for (int bits = 0; bits < (1 << n); ++bits) {
                    double l = -C * D / t;
                    for (int a = 0; a < n; ++a) l += std::log(table(a, (bits >> a) & 1, 0, 0));
                    per_eps[bits][j] = l;
                }
            }
            for (int bits = 0; bits < (1 << n); ++bits) log_omega[{C, bits}] = per_eps[bits];
        }
        const double rhs_log_v = log_v_lambda(lam, c.x, std::sqrt(D));
        for (std::size_t k = 0; k < which.size(); ++k) {
            const UpsilonParams& P = params[which[k]];
            int bits = 0;
            for (int a = 0; a < n; ++a) bits |= P.eps[a] << a;
            const Eigen::VectorXd& lo_vals = log_omega[{P.C, bits}];
            const bool sup = std::isinf(P.p);
            const double e = -n / 2.0 - lam.abs() - 2.0 * P.eps.sum() + (P.theta.sum() + P.rho.sum()) / 2.0 -
                             (sup ? 0.0 : P.W / P.p) - P.u / 2;
            double log_pre = 0;
            for (int a = 0; a < n; ++a)
                log_pre += (2 * P.eps[a] - P.theta[a]) * std::log(c.x[a]) + (2 * P.eps[a] - P.rho[a]) * std::log(c.y[a]);
            double lhs;
            if (sup) {
                double best = -kInf;
                Eigen::VectorXd lv(N + 1);
                for (Eigen::Index j = 0; j <= N; ++j) {
                    const double v = j < N ? rule.nodes[j] : hi;
                    lv[j] = e * v + log_pre + lo_vals[j];
                    best = std::max(best, lv[j]);
                }
                Eigen::VectorXd vn(N), fv(N);
                for (Eigen::Index j = 0; j < N; ++j) {
                    vn[j] = rule.nodes[j];
                    fv[j] = std::exp(lv[j] - best);
                }
                lhs = std::exp(best) * std::max(refined_sup(vn, fv), std::exp(lv[N] - best));
            } else {
                // int |Y|^p t^{W-1} dt = int |Y|^p t^W dv, plus the power tail beyond hi.
                double s = 0;
                for (Eigen::Index j = 0; j < N; ++j)
                    s += rule.weights[j] * std::exp(P.p * (e * rule.nodes[j] + log_pre + lo_vals[j]) + P.W * rule.nodes[j]);
                const double gamma = P.p * e + P.W;
                s += std::exp(P.p * (e * hi + log_pre + lo_vals[N]) + P.W * hi) / (-gamma);
                lhs = std::pow(s, 1 / P.p);
            }
            out[k] = lhs * std::exp(rhs_log_v) * std::pow(std::sqrt(D), P.u);
        }
        return out;
    };
    std::vector<std::size_t> all(params.size());
    std::iota(all.begin(), all.end(), 0);
    auto run = [&](int count, const Resolution& res, std::vector<RatioSet>& sets, std::vector<SampleConfig>& configs) {
        configs = sample_configs(grid, count, options.seed ^ 0x0b5110);
        sets.assign(params.size(), RatioSet{});
        for (auto& s : sets) {
            s.values.resize(count);
            s.converged.assign(count, 1);
        }
        parallel_for(count, options.threads, [&](long i) {
            const std::vector<double> v = values(configs[i], res, all);
            for (std::size_t k = 0; k < v.size(); ++k) sets[k].values[i] = v[k];
        });
    };
    std::vector<SampleConfig> bc, fc;
    std::vector<RatioSet> base, fine;
    run(options.samples, options.base, base, bc);
    if (options.refine) run(4 * options.samples, options.base.doubled(), fine, fc);
    std::vector<EstimateReport> out(params.size());
    // Each tuple has its own maximiser; the searches run in parallel over tuples.
    parallel_for(static_cast<long>(params.size()), options.threads, [&](long k) {
        RefinedPair p{base[k], options.refine ? fine[k] : RatioSet{}, bc, options.refine ? fc : std::vector<SampleConfig>{}};
        const std::vector<std::size_t> one{static_cast<std::size_t>(k)};
        refine_pair(
            p, options.refine,
            [&](bool is_fine) -> RatioFn {
                const Resolution res = is_fine ? options.base.doubled() : options.base;
                return [&, res](const SampleConfig& c) { return std::pair<double, bool>{values(c, res, one)[0], true}; };
            },
            Packing{}, grid, 1, false);
        out[k] = summarize("upsilon", params[k].describe(), p.base, options.refine ? &p.fine : nullptr, &p.base_cfg, false,
                           &p.fine_cfg);
        out[k].n_samples = options.samples * (options.refine ? 5 : 1);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Derivative lemma, pointwise

std::string Est33Params::describe() const {
    return "eps=" + ivec_str(eps) + " m=" + ivec_str(m) + " r=" + ivec_str(r) + " k=" + std::to_string(k);
}

std::vector<Est33Params> est33_suite(int n) {
    std::vector<Est33Params> out;
    const MultiIndex z = MultiIndex::Zero(n);
    MultiIndex e1 = z;
    e1[0] = 1;
    std::vector<std::tuple<MultiIndex, MultiIndex, int>> orders{{z, z, 0},      {e1, z, 0},      {z, e1, 0},
                                                                {z, z, 1},      {e1, e1, 0},     {2 * e1, z, 0},
                                                                {e1, z, 1},     {2 * e1, 2 * e1, 1}};
    if (n > 1) {
        MultiIndex ones = MultiIndex::Ones(n);
        orders.push_back({ones, ones, 0});
        orders.push_back({2 * ones, z, 1});
    }
    for (const auto& eps : all_eps(n))
        for (const auto& [m, r, k] : orders) out.push_back({eps, m, r, k});
    return out;
}

EstimateReport check_est33(const Est33Params& params, const VerifyOptions& options) {
    const int n = static_cast<int>(params.eps.size());
    const std::vector<TypeIndex> grid = lambda_grid({n}, options.lambda_components);
    std::map<double, TermList> lists;  // keyed by |lambda|; W depends only on it
    for (const auto& lam : grid)
        if (!lists.count(lam.abs())) lists.emplace(lam.abs(), derivative_terms(lam, params.eps, params.m, params.r, params.k));

    // A sample is a configuration with a time t and a point s of [-1,1]^n.
    struct Point {
        SampleConfig c;
        double t = 1;
        Vec s;
    };
    auto t_range = [](const SampleConfig& c) {
        return std::pair<double, double>{1e-4 * (c.x - c.y).squaredNorm(), 1e4 * std::pow(c.x.norm() + c.y.norm(), 2)};
    };
    auto ratio = [&](const Point& p) {
        const TermList& list = lists.at(p.c.lam.abs());
        const double lhs = std::abs(evaluate_terms(list, p.c.x, p.c.y, p.s, p.t));
        const double rhs = est33_rhs(list.W, params.eps, params.m, params.r, params.k, p.t, p.c.x, p.c.y, p.s);
        return rhs > 0 ? lhs / rhs : (lhs > 0 ? kInf : 0.0);
    };
    // Search vector: log x, log y, log t, s.
    auto pack = [&](const Point& p) {
        Vec v(3 * n + 1);
        v << p.c.x.array().log().matrix(), p.c.y.array().log().matrix(), std::log(p.t), p.s;
        return v;
    };
    auto unpack = [&](const Point& like, const Vec& v) {
        Point p = like;
        p.c.x = v.head(n).array().exp().matrix();
        p.c.y = v.segment(n, n).array().exp().matrix();
        p.t = std::exp(v[2 * n]);
        p.s = v.tail(n);
        return p;
    };
    auto inside = [&](const Point& p) {
        const auto [lo, hi] = t_range(p.c);
        return admissible(p.c) && p.t >= lo && p.t <= hi && (p.s.array().abs() <= 1).all();
    };
    auto climb_from = [&](const Point& start, double value) {
        double best = value;
        const Vec v = climb_vector(pack(start), value,
                                   [&](const Vec& q) {
                                       const Point p = unpack(start, q);
                                       return inside(p) ? ratio(p) : -kInf;
                                   },
                                   best, 1500);
        return std::pair<Point, double>{unpack(start, v), best};
    };

    auto run = [&](int count, std::vector<Point>& points, RatioSet& s) {
        const auto configs = sample_configs(grid, count, options.seed ^ 0xe533);
        points.resize(count);
        s.values.resize(count);
        s.converged.assign(count, 1);
        parallel_for(count, options.threads, [&](long i) {
            Point& p = points[i];
            p.c = configs[i];
            Rng rng(options.seed ^ 0x7e57, static_cast<std::uint64_t>(i), 1);
            const auto [lo, hi] = t_range(p.c);
            p.t = rng.log_uniform(lo, hi);
            p.s.resize(n);
            for (int a = 0; a < n; ++a) {
                const double pick = rng.unit();
                p.s[a] = pick < 0.25 ? -1.0 : pick < 0.5 ? 1.0 : rng.uniform(-1, 1);
            }
            s.values[i] = ratio(p);
        });
    };
    // Local search from the largest samples and from the seeds, then restarts.
    auto refine = [&](std::vector<Point>& points, RatioSet& s, const std::vector<Point>& seeds) {
        constexpr std::size_t kStarts = 8;
        std::vector<std::size_t> order(s.values.size());
        std::iota(order.begin(), order.end(), 0);
        auto key = [&](std::size_t i) { return std::isfinite(s.values[i]) ? s.values[i] : -kInf; };
        const std::size_t top = std::min(kStarts, order.size());
        std::partial_sort(order.begin(), order.begin() + top, order.end(),
                          [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
        std::vector<std::pair<Point, double>> starts;
        for (std::size_t i = 0; i < top; ++i)
            if (key(order[i]) > 0) starts.push_back({points[order[i]], s.values[order[i]]});
        // plus the best sample of every |lambda|
        std::map<double, std::size_t> per_abs;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double a = points[i].c.lam.abs();
            if (key(i) > 0 && (!per_abs.count(a) || key(i) > key(per_abs[a]))) per_abs[a] = i;
        }
        for (const auto& [a, i] : per_abs) starts.push_back({points[i], s.values[i]});
        for (const Point& p : seeds) starts.push_back({p, ratio(p)});
        std::vector<std::pair<Point, double>> found(starts.size());
        parallel_for(static_cast<long>(starts.size()), options.threads,
                     [&](long i) { found[i] = climb_from(starts[i].first, starts[i].second); });
        std::vector<Point> out;
        if (found.empty()) return out;
        auto current = *std::max_element(found.begin(), found.end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; });
        for (int round = 0; round < 3; ++round) {
            const auto next = climb_from(current.first, current.second);
            if (!(next.second > current.second * (1 + 1e-6))) break;
            current = next;
        }
        found.push_back(current);
        // the best point carried over to every |lambda|
        std::vector<std::pair<Point, double>> moved;
        for (const auto& [a, i] : per_abs) {
            Point q = current.first;
            q.c.lam = points[i].c.lam;
            if (inside(q)) moved.push_back({q, ratio(q)});
        }
        std::vector<std::pair<Point, double>> climbed(moved.size());
        parallel_for(static_cast<long>(moved.size()), options.threads,
                     [&](long i) { climbed[i] = climb_from(moved[i].first, moved[i].second); });
        found.insert(found.end(), climbed.begin(), climbed.end());
        for (const auto& [p, v] : found) {
            points.push_back(p);
            s.values.push_back(v);
            s.converged.push_back(1);
            out.push_back(p);
        }
        return out;
    };

    std::vector<Point> bp, fp;
    RatioSet base, fine;
    run(options.samples, bp, base);
    const std::vector<Point> b_found = refine(bp, base, {});
    if (options.refine) {
        run(4 * options.samples, fp, fine);
        refine(fp, fine, b_found);
    }
    std::vector<SampleConfig> bc, fc;
    for (const Point& p : bp) bc.push_back(p.c);
    for (const Point& p : fp) fc.push_back(p.c);
    EstimateReport r = summarize("est33", params.describe(), base, options.refine ? &fine : nullptr, &bc, false, &fc);
    r.n_samples = options.samples * (options.refine ? 5 : 1);
    if (r.argmax >= 0) {
        std::ostringstream extra;
        extra << " t=" << bp[r.argmax].t << " s=" << vec_str(bp[r.argmax].s);
        r.argmax_desc += extra.str();
    }
    return r;
}

// ---------------------------------------------------------------------------
// Measure equivalence

EstimateReport check_measure_equivalence(const VerifyOptions& options) {
    const std::vector<TypeIndex> grid = lambda_grid(options.dims, options.lambda_components);
    SampleOptions so;
    so.x_prime = true;
    auto ratio = [](const SampleConfig& c) {
        const Vec& z = *c.x_prime;
        const double dz = (z - c.y).norm(), dx = (c.x - c.y).norm();
        return std::exp(std::log(dz) + log_v_lambda(c.lam, z, dz) - std::log(dx) - log_v_lambda(c.lam, c.x, dx));
    };
    auto run = [&](int count, RatioSet& s, std::vector<SampleConfig>& configs) {
        configs = sample_configs(grid, count, options.seed ^ 0x3e45, so);
        s.values.resize(count);
        s.converged.assign(count, 1);
        parallel_for(count, options.threads, [&](long i) { s.values[i] = ratio(configs[i]); });
    };
    RefinedPair p;
    run(options.samples, p.base, p.base_cfg);
    if (options.refine) run(4 * options.samples, p.fine, p.fine_cfg);
    refine_pair(
        p, options.refine,
        [&](bool) -> RatioFn { return [&](const SampleConfig& c) { return std::pair<double, bool>{ratio(c), true}; }; },
        Packing{true, false}, grid, options.threads, true);
    EstimateReport r = summarize("measure_equivalence", "|z-y|V(z,|z-y|)/(|x-y|V(x,|x-y|)), |x-y|>2|x-z|", p.base,
                                 options.refine ? &p.fine : nullptr, &p.base_cfg, true, &p.fine_cfg);
    r.n_samples = options.samples * (options.refine ? 5 : 1);
    return r;
}

// ---------------------------------------------------------------------------
// Exact inequalities

std::vector<EstimateReport> check_theta_lemma(long samples, std::uint64_t seed, int threads) {
    constexpr double slack = 1e-12;
    struct Tally {
        long q_lower = 0, compare_x = 0, compare_y = 0;
        double worst_q = 0, worst_x = 0, worst_y = 0;
    };
    const int workers = std::max(1, threads);
    std::vector<Tally> tallies(workers);
    auto body = [&](int w) {
        Tally& T = tallies[w];
        for (long i = w; i < samples; i += workers) {
            Rng rng(seed, static_cast<std::uint64_t>(i), 2);
            const int n = 1 + static_cast<int>(i % 3);
            Vec x(n), u(n);
            for (int a = 0; a < n; ++a) x[a] = rng.log_uniform(1e-4, 1e2);
            const double r = rng.log_uniform(1e-3, 1e3) * x.norm();
            Vec y = point_near(rng, x, r, 100000);
            for (int a = 0; a < n; ++a) {
                const double pick = rng.unit();
                u[a] = pick < 0.25 ? 0.0 : pick < 0.5 ? 2.0 : rng.uniform(0, 2);
            }
            if (i % 5 == 0) u.setZero();  // the extreme s = -1 corner
            const double dist = (x - y).norm();
            const double q = q_form_stable(x, y, u);
            const double D = dist * dist;
            if (q < D * (1 - slack)) ++T.q_lower;
            T.worst_q = std::max(T.worst_q, D / q);
            // z near x with |x-y| > 2|x-z|, and the mirror near y.
            Vec z;
            do z = point_near(rng, x, rng.uniform(0, 0.5) * dist, 100000);
            while (!(dist > 2 * (x - z).norm()));
            const double qz = q_form_stable(z, y, u);
            if (qz < q / 4 * (1 - slack) || qz > 4 * q * (1 + slack)) ++T.compare_x;
            T.worst_x = std::max({T.worst_x, q / (4 * qz), qz / (4 * q)});
            Vec zy;
            do zy = point_near(rng, y, rng.uniform(0, 0.5) * dist, 100000);
            while (!(dist > 2 * (y - zy).norm()));
            const double qy = q_form_stable(x, zy, u);
            if (qy < q / 4 * (1 - slack) || qy > 4 * q * (1 + slack)) ++T.compare_y;
            T.worst_y = std::max({T.worst_y, q / (4 * qy), qy / (4 * q)});
        }
    };
    if (workers == 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
        for (auto& t : pool) t.join();
    }
    Tally all;
    for (const auto& T : tallies) {
        all.q_lower += T.q_lower;
        all.compare_x += T.compare_x;
        all.compare_y += T.compare_y;
        all.worst_q = std::max(all.worst_q, T.worst_q);
        all.worst_x = std::max(all.worst_x, T.worst_x);
        all.worst_y = std::max(all.worst_y, T.worst_y);
    }
    auto make = [&](const char* id, const char* params, long v, double worst) {
        EstimateReport r;
        r.check_id = id;
        r.params = params;
        r.n_samples = samples;
        r.exact = true;
        r.violations = v;
        r.c_emp = worst;  // largest (lower bound)/(value); <= 1 means satisfied
        return r;
    };
    return {make("q_lower_bound", "q >= |x-y|^2", all.q_lower, all.worst_q),
            make("theta_lemma_x", "q/4 <= q(z,y,s) <= 4q, |x-y|>2|x-z|", all.compare_x, all.worst_x),
            make("theta_lemma_y", "q/4 <= q(x,z,s) <= 4q, |x-y|>2|y-z|", all.compare_y, all.worst_y)};
}

EstimateReport check_laplace_constant(const VerifyOptions& options, int samples) {
    const std::vector<TypeIndex> grid = lambda_grid(options.dims, options.lambda_components);
    EstimateReport r;
    r.check_id = "laplace_constant";
    r.params = "psi=1, |x-y|>=1/2, |K|<=1e-8";
    r.exact = true;
    r.n_samples = samples;
    std::vector<double> values(samples);
    std::vector<std::string> desc(samples);
    parallel_for(samples, options.threads, [&](long i) {
        Rng rng(options.seed ^ 0x1a91ace, static_cast<std::uint64_t>(i));
        const TypeIndex& lam = grid[rng.index(grid.size())];
        const int n = lam.n();
        Vec x(n), y(n);
        do {
            for (int a = 0; a < n; ++a) {
                x[a] = rng.uniform(0.05, 5);
                y[a] = rng.uniform(0.05, 5);
            }
        } while ((x - y).norm() < 0.5);
        values[i] = std::abs(laplace_mult_kernel(lam, LaplaceSymbol::constant(1), x, y).value);
        desc[i] = "lambda=" + vec_str(lam.values()) + " x=" + vec_str(x) + " y=" + vec_str(y);
    });
    for (int i = 0; i < samples; ++i) {
        if (values[i] > 1e-8) ++r.violations;
        if (values[i] > r.c_emp || r.argmax < 0) {
            r.c_emp = values[i];
            r.argmax = i;
            r.argmax_desc = desc[i];
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Ball comparability

std::vector<BallReport> check_ball_comparability(const std::vector<TypeIndex>& lams, int samples, int budget,
                                                 std::uint64_t seed) {
    std::vector<BallReport> out;
    for (const TypeIndex& lam : lams) {
        BallReport rep;
        rep.lam = lam;
        rep.samples = samples;
        double c = kInf, C = 0, cf = kInf, Cf = 0;
        for (int i = 0; i < samples; ++i) {
            Rng rng(seed, static_cast<std::uint64_t>(i), 3);
            const int n = lam.n();
            Vec x(n);
            for (int a = 0; a < n; ++a) x[a] = rng.log_uniform(1e-3, 1e2);
            const double R = rng.log_uniform(1e-3, 1e3) * x.norm();
            const double v = v_lambda(lam, x, R);
            const std::uint64_t qmc_seed = seed ^ static_cast<std::uint64_t>(i);
            const BallMeasure b = mu_ball(lam, x, R, budget, qmc_seed);
            const BallMeasure bf = mu_ball(lam, x, R, 4 * budget, qmc_seed);
            rep.flagged += b.flagged;
            c = std::min(c, b.value / v);
            C = std::max(C, b.value / v);
            cf = std::min(cf, bf.value / v);
            Cf = std::max(Cf, bf.value / v);
        }
        rep.c = c;
        rep.C = C;
        rep.drift = std::max(std::abs(Cf - C) / C, std::abs(cf - c) / c);
        out.push_back(rep);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suite

std::vector<EstimateReport> run_suite(const VerifyOptions& options, bool quick) {
    VerifyOptions o = options;
    VerifyOptions lemma = options;
    if (quick) {
        o.samples = std::min(o.samples, 400);
        lemma.samples = std::min(lemma.samples, 200);
    } else {
        lemma.samples = std::min(lemma.samples, 1000);
    }
    std::vector<EstimateReport> all;
    auto append = [&](std::vector<EstimateReport> v) { all.insert(all.end(), v.begin(), v.end()); };
    for (const auto& k : KernelSpec::standard_suite()) append(check_standard(k, o));
    for (int n : options.dims) {
        for (const auto& b : bridge_suite(n)) {
            try {
                all.push_back(check_bridge(b, lemma));
            } catch (const DomainError&) {
                // xi = kappa = 0 needs lambda >= 0 entries; skipped when the grid has none.
            }
        }
        append(check_upsilon(upsilon_suite(n), lemma));
        VerifyOptions pointwise = lemma;
        pointwise.samples = quick ? 1000 : 10000;
        for (const auto& e : est33_suite(n)) all.push_back(check_est33(e, pointwise));
    }
    VerifyOptions me = options;
    me.samples = quick ? 2000 : 100000;
    all.push_back(check_measure_equivalence(me));
    append(check_theta_lemma(quick ? 100000 : 1000000, options.seed, options.threads));
    all.push_back(check_laplace_constant(options, quick ? 20 : 200));
    return all;
}

}  // namespace besselcz
