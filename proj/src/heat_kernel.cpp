#include "besselcz/heat_kernel.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "besselcz/quadrature.hpp"

namespace besselcz {

namespace {

void check_inputs(const TypeIndex& lam, double t, const Vec& x, const Vec& y) {
    if (!(t > 0) || !std::isfinite(t)) throw DomainError("heat kernel: t must be positive and finite");
    require_half_space(x, lam.n(), "x");
    require_half_space(y, lam.n(), "y");
}

// One composition of j into n+1 parts: (j_0 for |x-y|^2, j_1..j_n for the b_i u_i).
struct Composition {
    double multinomial;
    std::vector<int> parts;
};

const std::vector<Composition>& compositions(int n, int j) {
    thread_local std::map<std::pair<int, int>, std::vector<Composition>> cache;
    auto key = std::make_pair(n, j);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<Composition> out;
    std::vector<int> parts(n + 1, 0);
    auto rec = [&](auto&& self, int slot, int left) -> void {
        if (slot == n) {
            parts[n] = left;
            double log_m = std::lgamma(j + 1.0);
            for (int p : parts) log_m -= std::lgamma(p + 1.0);
            out.push_back({std::round(std::exp(log_m)), parts});
            return;
        }
        for (int v = 0; v <= left; ++v) {
            parts[slot] = v;
            self(self, slot + 1, left - v);
        }
    };
    rec(rec, 0, j);
    return cache.emplace(key, std::move(out)).first->second;
}

}  // namespace

const char* to_string(KernelRep rep) {
    switch (rep) {
        case KernelRep::Product: return "product";
        case KernelRep::Schlafli: return "schlafli";
        case KernelRep::Extended: return "extended";
    }
    return "?";
}

double kernel_schlafli(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order) {
    check_inputs(lam, t, x, y);
    if (!lam.nonnegative()) throw DomainError("kernel_schlafli: requires lambda >= 0 in every coordinate");
    const int n = lam.n();
    double log_w = -(n / 2.0 + lam.abs()) * std::log(2 * t) - (x - y).squaredNorm() / (4 * t);
    for (int i = 0; i < n; ++i) {
        const double a = x[i] * y[i] / (2 * t);
        const OmegaRule rule = omega_exp_rule(lam[i], order, a);
        const double m = rule.weights.dot((-a * rule.u.array()).exp().matrix());
        log_w += std::log(m);
    }
    return std::exp(log_w);
}

double kernel_extended(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order) {
    check_inputs(lam, t, x, y);
    const MultiIndex zero = MultiIndex::Zero(lam.n());
    DerivativeExpansion expansion(lam, zero, zero, 0);
    return expansion.evaluate(t, x, y, order).value;
}

double heat_kernel(KernelRep rep, const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order) {
    switch (rep) {
        case KernelRep::Product: check_inputs(lam, t, x, y); return kernel_product(lam, t, x, y);
        case KernelRep::Schlafli: return kernel_schlafli(lam, t, x, y, order);
        case KernelRep::Extended: return kernel_extended(lam, t, x, y, order);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Term calculus

int TermList::max_spow() const {
    int d = 0;
    for (const auto& term : terms) d = std::max(d, term.spow.size() ? term.spow.maxCoeff() : 0);
    return d;
}

int TermList::max_qpow() const {
    int p = 0;
    for (const auto& term : terms) p = std::max(p, term.qpow);
    return p;
}

TermList base_terms(int n, double W, const Eigen::VectorXi& eps) {
    TermList list;
    list.n = n;
    list.W = W;
    IntegrandTerm term;
    term.xpow = 2 * eps;
    term.ypow = 2 * eps;
    term.spow = Eigen::VectorXi::Zero(n);
    list.terms.push_back(term);
    return list;
}

void merge_terms(TermList& list) {
    std::map<std::vector<int>, std::size_t> index;
    std::vector<IntegrandTerm> merged;
    for (const auto& term : list.terms) {
        std::vector<int> key;
        key.reserve(3 * list.n + 2);
        for (int i = 0; i < list.n; ++i) {
            key.push_back(term.xpow[i]);
            key.push_back(term.ypow[i]);
            key.push_back(term.spow[i]);
        }
        key.push_back(term.tshift);
        key.push_back(term.qpow);
        auto [it, inserted] = index.emplace(key, merged.size());
        if (inserted)
            merged.push_back(term);
        else
            merged[it->second].coeff += term.coeff;
    }
    std::erase_if(merged, [](const IntegrandTerm& term) { return term.coeff == 0; });
    list.terms = std::move(merged);
}

namespace {

// d/dv for v = x_i (own = xpow, other = ypow) or v = y_i (roles swapped).
void differentiate_space(TermList& list, int i, bool in_x) {
    std::vector<IntegrandTerm> out;
    for (const auto& term : list.terms) {
        const Eigen::VectorXi& own = in_x ? term.xpow : term.ypow;
        auto with = [&](double c, int d_own, int d_other, int d_s, int d_t, int d_q) {
            IntegrandTerm next = term;
            next.coeff = c;
            (in_x ? next.xpow : next.ypow)[i] += d_own;
            (in_x ? next.ypow : next.xpow)[i] += d_other;
            next.spow[i] += d_s;
            next.tshift += d_t;
            next.qpow += d_q;
            out.push_back(next);
        };
        if (own[i] != 0) with(term.coeff * own[i], -1, 0, 0, 0, 0);
        // d q / d x_i = 2 x_i + 2 y_i s_i
        if (term.qpow != 0) {
            with(2.0 * term.qpow * term.coeff, 1, 0, 0, 0, -1);
            with(2.0 * term.qpow * term.coeff, 0, 1, 1, 0, -1);
        }
        // exp(-q/4t): -(x_i + y_i s_i) / 2t
        with(-0.5 * term.coeff, 1, 0, 0, -1, 0);
        with(-0.5 * term.coeff, 0, 1, 1, -1, 0);
    }
    list.terms = std::move(out);
    merge_terms(list);
}

}  // namespace

void differentiate_x(TermList& list, int i) { differentiate_space(list, i, true); }
void differentiate_y(TermList& list, int i) { differentiate_space(list, i, false); }

void differentiate_t(TermList& list) {
    std::vector<IntegrandTerm> out;
    for (const auto& term : list.terms) {
        const double power = list.W + term.tshift;
        if (power != 0) {
            IntegrandTerm next = term;
            next.coeff *= power;
            next.tshift -= 1;
            out.push_back(next);
        }
        // exp(-q/4t): q / 4t^2
        IntegrandTerm next = term;
        next.coeff *= 0.25;
        next.tshift -= 2;
        next.qpow += 1;
        out.push_back(next);
    }
    list.terms = std::move(out);
    merge_terms(list);
}

TermList derivative_terms(double W, const Eigen::VectorXi& eps, const MultiIndex& m, const MultiIndex& r, int k) {
    const int n = static_cast<int>(eps.size());
    if (m.size() != n || r.size() != n) throw DomainError("derivative_terms: multi-index dimension mismatch");
    if ((m.array() < 0).any() || (r.array() < 0).any() || k < 0)
        throw DomainError("derivative_terms: derivative orders must be nonnegative");
    TermList list = base_terms(n, W, eps);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m[i]; ++j) differentiate_x(list, i);
        for (int j = 0; j < r[i]; ++j) differentiate_y(list, i);
    }
    for (int j = 0; j < k; ++j) differentiate_t(list);
    return list;
}

TermList derivative_terms(const TypeIndex& lam, const Eigen::VectorXi& eps, const MultiIndex& m,
                          const MultiIndex& r, int k) {
    if (eps.size() != lam.n()) throw DomainError("derivative_terms: eps dimension mismatch");
    return derivative_terms(-lam.n() / 2.0 - lam.abs() - 2.0 * eps.sum(), eps, m, r, k);
}

double evaluate_terms(const TermList& list, const Vec& x, const Vec& y, const Vec& s, double t) {
    const Vec u = (s.array() + 1).matrix();
    const double q = q_form_stable(x, y, u);
    const double log_t = std::log(t);
    double sum = 0;
    for (const auto& term : list.terms) {
        double log_mag = list.tpow(term) * log_t - q / (4 * t);
        double sign = term.coeff;
        for (int i = 0; i < list.n; ++i) {
            log_mag += term.xpow[i] * std::log(x[i]) + term.ypow[i] * std::log(y[i]);
            sign *= std::pow(s[i], term.spow[i]);
        }
        sum += sign * std::pow(q, term.qpow) * std::exp(log_mag);
    }
    return sum;
}

double extended_constant(const TypeIndex& lam, const Eigen::VectorXi& eps) {
    const int n = lam.n();
    double log_c = -(n / 2.0 + lam.abs() + 2.0 * eps.sum()) * std::log(2.0);
    for (int i = 0; i < n; ++i)
        if (eps[i] == 0) log_c += std::log(2 * lam[i] + 1);
    return std::exp(log_c);
}

std::vector<Eigen::VectorXi> all_eps(int n) {
    std::vector<Eigen::VectorXi> out;
    for (int bits = 0; bits < (1 << n); ++bits) {
        Eigen::VectorXi e(n);
        for (int i = 0; i < n; ++i) e[i] = (bits >> i) & 1;
        out.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Moments and expansion evaluation

void MomentTable::prepare(const TypeIndex& lam, double t, const Vec& x, const Vec& y, int order, int dmax, int pmax,
                          double rate_scale) {
    const int n = lam.n();
    dmax_ = dmax;
    pmax_ = pmax;
    data_.assign(static_cast<std::size_t>(n) * 2 * (dmax + 1) * (pmax + 1), 0.0);
    std::vector<double> spow(dmax + 1), upow(pmax + 1);
    OmegaRule scratch;
    for (int i = 0; i < n; ++i) {
        const double a = rate_scale * x[i] * y[i] / (2 * t);
        for (int e = 0; e < 2; ++e) {
            const OmegaRule& rule = omega_exp_rule_ref(lam[i] + 1 + e, order, a, dmax + pmax, scratch);
            double* block = &data_[(static_cast<std::size_t>(i) * 2 + e) * (dmax + 1) * (pmax + 1)];
            for (Eigen::Index k = 0; k < rule.u.size(); ++k) {
                const double u = rule.u[k];
                const double w = rule.weights[k] * std::exp(-a * u);
                if (w == 0) continue;
                const double s = u - 1;
                spow[0] = w;
                for (int d = 1; d <= dmax; ++d) spow[d] = spow[d - 1] * s;
                upow[0] = 1;
                for (int p = 1; p <= pmax; ++p) upow[p] = upow[p - 1] * u;
                for (int d = 0; d <= dmax; ++d)
                    for (int p = 0; p <= pmax; ++p) block[d * (pmax + 1) + p] += spow[d] * upow[p];
            }
        }
    }
}

DerivativeExpansion::DerivativeExpansion(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k)
    : lam_(lam), eps_(all_eps(lam.n())) {
    for (const auto& eps : eps_) {
        lists_.push_back(derivative_terms(lam, eps, m, r, k));
        log_c_.push_back(std::log(extended_constant(lam, eps)));
        dmax_ = std::max(dmax_, lists_.back().max_spow());
        pmax_ = std::max(pmax_, lists_.back().max_qpow());
    }
}

std::size_t DerivativeExpansion::term_count() const {
    std::size_t c = 0;
    for (const auto& l : lists_) c += l.terms.size();
    return c;
}

ExpansionValue DerivativeExpansion::evaluate(const MomentTable& moments, double t, const Vec& x, const Vec& y,
                                             double log_extra) const {
    const int n = lam_.n();
    const double D = (x - y).squaredNorm();
    const double log_t = std::log(t);
    const double base = -D / (4 * t) + log_extra;
    // Powers of |x-y|^2 and b_i = 2 x_i y_i.
    Eigen::MatrixXd pw(n + 1, pmax_ + 1);
    for (int i = 0; i <= n; ++i) {
        const double b = i == 0 ? D : 2 * x[i - 1] * y[i - 1];
        pw(i, 0) = 1;
        for (int p = 1; p <= pmax_; ++p) pw(i, p) = pw(i, p - 1) * b;
    }
    Vec log_x = x.array().log().matrix(), log_y = y.array().log().matrix();
    auto ipow = [](double b, int k) {
        double r = 1;
        for (int j = 0; j < std::abs(k); ++j) r *= b;
        return k < 0 ? 1 / r : r;
    };

    ExpansionValue out;
    for (std::size_t e = 0; e < lists_.size(); ++e) {
        const TermList& list = lists_[e];
        const Eigen::VectorXi& eps = eps_[e];
        // Common factor of the list; the integer powers are multiplied in
        // directly while the factor stays well inside the double range.
        const double log_common = base + log_c_[e] + list.W * log_t;
        const bool direct = std::abs(log_common) < 500 && t > 1e-30 && t < 1e30;
        const double common = direct ? std::exp(log_common) : 0;
        for (const auto& term : list.terms) {
            double s_sum = 0;
            for (const Composition& c : compositions(n, term.qpow)) {
                double prod = c.multinomial * pw(0, c.parts[0]);
                for (int i = 0; i < n; ++i)
                    prod *= pw(i + 1, c.parts[i + 1]) * moments(i, eps[i], term.spow[i], c.parts[i + 1]);
                s_sum += prod;
            }
            double contribution = 0;
            if (direct) {
                double f = common * ipow(t, term.tshift);
                for (int i = 0; i < n; ++i) f *= ipow(x[i], term.xpow[i]) * ipow(y[i], term.ypow[i]);
                contribution = term.coeff * f * s_sum;
            }
            if (!direct || !std::isfinite(contribution) || std::abs(contribution) < 1e-290) {
                double log_pref = log_common + term.tshift * log_t;
                for (int i = 0; i < n; ++i) log_pref += term.xpow[i] * log_x[i] + term.ypow[i] * log_y[i];
                contribution = term.coeff * std::exp(log_pref) * s_sum;
            }
            out.value += contribution;
            out.magnitude += std::abs(contribution);
        }
    }
    return out;
}

ExpansionValue DerivativeExpansion::evaluate(double t, const Vec& x, const Vec& y, int order,
                                             double log_extra) const {
    check_inputs(lam_, t, x, y);
    MomentTable table;
    table.prepare(lam_, t, x, y, order, dmax_, pmax_);
    return evaluate(table, t, x, y, log_extra);
}

const DerivativeExpansion& cached_expansion(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k) {
    if (m.size() != lam.n() || r.size() != lam.n()) throw DomainError("derivative multi-index has the wrong dimension");
    std::vector<double> key(lam.values().data(), lam.values().data() + lam.n());
    for (int i = 0; i < lam.n(); ++i) key.push_back(m[i]);
    for (int i = 0; i < lam.n(); ++i) key.push_back(r[i]);
    key.push_back(k);
    thread_local std::map<std::vector<double>, DerivativeExpansion> cache;
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    return cache.emplace(key, DerivativeExpansion(lam, m, r, k)).first->second;
}

double kernel_derivative(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k, double t,
                         const Vec& x, const Vec& y, int order) {
    return cached_expansion(lam, m, r, k).evaluate(t, x, y, order).value;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

namespace {

using LD = long double;

constexpr LD kStepRatio = 1.4L;

struct Axis {
    int var;  // 0..n-1: x_i, n..2n-1: y_i, 2n: t
    int order;
};

LD binomial(int p, int j) {
    LD c = 1;
    for (int i = 0; i < j; ++i) c = c * (p - i) / (i + 1);
    return c;
}

LD nested_difference(const TypeIndex& lam, const std::vector<Axis>& axes, const VecT<LD>& base,
                     const std::vector<LD>& steps) {
    const int n = lam.n();
    LD sum = 0;
    std::vector<int> idx(axes.size(), 0);
    while (true) {
        VecT<LD> p = base;
        LD c = 1;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const int ord = axes[a].order;
            const LD h = steps[a];
            p[axes[a].var] += (LD(ord) / 2 - idx[a]) * h;
            c *= ((idx[a] % 2) ? -1 : 1) * binomial(ord, idx[a]) / std::pow(h, ord);
        }
        const VecT<LD> x = p.head(n), y = p.segment(n, n);
        sum += c * kernel_product<LD>(lam, p[2 * n], x, y);
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] <= axes[a].order) break;
            idx[a] = 0;
        }
        if (a == axes.size()) break;
    }
    return sum;
}

}  // namespace

FdResult kernel_derivative_fd(const TypeIndex& lam, const MultiIndex& m, const MultiIndex& r, int k, double t,
                              const Vec& x, const Vec& y, double h, int richardson_levels) {
    check_inputs(lam, t, x, y);
    if (richardson_levels < 2 || richardson_levels > 10) throw DomainError("kernel_derivative_fd: levels must be in [2,10]");
    const int n = lam.n();
    if (n > 1) {
        // W is a product over coordinates: Leibniz in t over one-dimensional differences.
        std::vector<std::vector<FdResult>> parts(n);
        for (int i = 0; i < n; ++i)
            for (int ki = 0; ki <= k; ++ki)
                parts[i].push_back(kernel_derivative_fd(TypeIndex{lam[i]}, m.segment(i, 1), r.segment(i, 1), ki, t,
                                                        x.segment(i, 1), y.segment(i, 1), h, richardson_levels));
        FdResult out;
        std::vector<int> split(n, 0);
        auto visit = [&](auto&& self, int i, int left) -> void {
            if (i == n - 1) {
                split[i] = left;
                double coeff = std::tgamma(k + 1.0), value = 1, error = 0;
                for (int j = 0; j < n; ++j) {
                    const FdResult& f = parts[j][split[j]];
                    coeff /= std::tgamma(split[j] + 1.0);
                    error = error * std::abs(f.value) + std::abs(value) * f.error;
                    value *= f.value;
                }
                out.value += coeff * value;
                out.error += coeff * error;
                return;
            }
            for (int ki = 0; ki <= left; ++ki) {
                split[i] = ki;
                self(self, i + 1, left - ki);
            }
        };
        visit(visit, 0, k);
        return out;
    }
    std::vector<Axis> axes;
    for (int i = 0; i < n; ++i) {
        if (m[i] > 0) axes.push_back({i, m[i]});
        if (r[i] > 0) axes.push_back({n + i, r[i]});
    }
    if (k > 0) axes.push_back({2 * n, k});

    VecT<LD> base(2 * n + 1);
    for (int i = 0; i < n; ++i) {
        base[i] = x[i];
        base[n + i] = y[i];
    }
    base[2 * n] = t;
    if (axes.empty()) return {static_cast<double>(kernel_product<LD>(lam, t, base.head(n), base.segment(n, n))), 0};

    // Each step resolves the shortest local scale of its variable: the
    // coordinate itself, the diffusion length, the Gaussian slope.
    std::vector<LD> steps;
    for (const Axis& a : axes) {
        if (a.var == 2 * n) {
            steps.push_back(h * t);
            continue;
        }
        const int i = a.var % n;
        const double own = a.var < n ? x[i] : y[i];
        double scale = std::min(own, std::sqrt(t));
        const double diff = std::abs(x[i] - y[i]);
        if (diff > 0) scale = std::min(scale, 2 * t / diff);
        steps.push_back(std::min(h * scale, 1.8 * own / a.order));
    }

    const int levels = richardson_levels;
    LD table[10][10];
    for (int l = 0; l < levels; ++l) {
        std::vector<LD> scaled = steps;
        for (LD& st : scaled) st /= std::pow(kStepRatio, l);
        table[0][l] = nested_difference(lam, axes, base, scaled);
    }
    for (int j = 1; j < levels; ++j) {
        const LD p = std::pow(kStepRatio * kStepRatio, j);
        for (int l = 0; l + j < levels; ++l) table[j][l] = (p * table[j - 1][l + 1] - table[j - 1][l]) / (p - 1);
    }
    // As in Ridders' scheme, keep the tableau entry that agrees best with both
    // of its lower-order neighbours; high orders at small steps are dominated
    // by rounding.
    LD best = table[levels - 1][0], best_error = std::numeric_limits<LD>::infinity();
    for (int j = 1; j < levels; ++j)
        for (int l = 0; l + j < levels; ++l) {
            const LD e = std::max(std::abs(table[j][l] - table[j - 1][l]), std::abs(table[j][l] - table[j - 1][l + 1]));
            if (e < best_error) {
                best_error = e;
                best = table[j][l];
            }
        }
    return {static_cast<double>(best), static_cast<double>(best_error)};
}

// ---------------------------------------------------------------------------
// Majorant of the derivative lemma

namespace {

// Calls f(beta_eps, gamma_eps) for each distinct pair with beta, gamma in {0,1,2}^n.
template <class F>
void for_each_beta_gamma(const Eigen::VectorXi& eps, F&& f) {
    const int n = static_cast<int>(eps.size());
    const int active = eps.sum();
    int total = 1;
    for (int i = 0; i < 2 * active; ++i) total *= 3;
    Eigen::VectorXi be(n), ge(n);
    for (int code = 0; code < total; ++code) {
        int c = code;
        be.setZero();
        ge.setZero();
        for (int i = 0; i < n; ++i) {
            if (!eps[i]) continue;
            be[i] = c % 3;
            c /= 3;
            ge[i] = c % 3;
            c /= 3;
        }
        f(be, ge);
    }
}

}  // namespace

double est33_rhs(double W, const Eigen::VectorXi& eps, const MultiIndex& m, const MultiIndex& r, int k, double t,
                 const Vec& x, const Vec& y, const Vec& s) {
    const Vec u = (s.array() + 1).matrix();
    const double q = q_form_stable(x, y, u);
    const double log_t = std::log(t);
    double sum = 0;
    for_each_beta_gamma(eps, [&](const Eigen::VectorXi& be, const Eigen::VectorXi& ge) {
        double l = (W - k - (m.sum() - be.sum() + r.sum() - ge.sum()) / 2.0) * log_t - q / (8 * t);
        for (int i = 0; i < x.size(); ++i) l += (2 * eps[i] - be[i]) * std::log(x[i]) + (2 * eps[i] - ge[i]) * std::log(y[i]);
        sum += std::exp(l);
    });
    return sum;
}

double est33_rhs_integrated(const TypeIndex& lam, double W, const Eigen::VectorXi& eps, const MultiIndex& m,
                            const MultiIndex& r, int k, double t, const Vec& x, const Vec& y, int order) {
    check_inputs(lam, t, x, y);
    const int n = lam.n();
    MomentTable table;
    table.prepare(lam, t, x, y, order, 0, 0, 0.5);
    double log_omega = -(x - y).squaredNorm() / (8 * t);
    for (int i = 0; i < n; ++i) log_omega += std::log(table(i, eps[i], 0, 0));
    const double log_t = std::log(t);
    double sum = 0;
    for_each_beta_gamma(eps, [&](const Eigen::VectorXi& be, const Eigen::VectorXi& ge) {
        double l = (W - k - (m.sum() - be.sum() + r.sum() - ge.sum()) / 2.0) * log_t + log_omega;
        for (int i = 0; i < n; ++i) l += (2 * eps[i] - be[i]) * std::log(x[i]) + (2 * eps[i] - ge[i]) * std::log(y[i]);
        sum += std::exp(l);
    });
    return sum;
}

}  // namespace besselcz
