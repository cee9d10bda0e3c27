#include "besselcz/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "besselcz/hankel.hpp"
#include "besselcz/heat_kernel.hpp"
#include "besselcz/operators.hpp"
#include "besselcz/verifier.hpp"

namespace besselcz {

namespace {

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw DomainError(std::string("cannot parse ") + what + " entry '" + item + "'");
        }
    }
    if (out.empty()) throw DomainError(std::string(what) + " is empty");
    return out;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

TypeIndex parse_lambda(const std::string& text) { return TypeIndex(to_vec(parse_list(text, "lambda"))); }

Vec parse_point(const std::string& text, int n, const char* what) {
    const Vec p = to_vec(parse_list(text, what));
    if (p.size() != n) throw DomainError(std::string(what) + " must have " + std::to_string(n) + " coordinates");
    return p;
}

MultiIndex parse_multi(const std::string& text, int n) {
    MultiIndex m = MultiIndex::Zero(n);
    if (text.empty()) return m;
    const auto v = parse_list(text, "multi-index");
    if (static_cast<int>(v.size()) > n) throw DomainError("multi-index longer than the dimension");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0 || v[i] != std::floor(v[i])) throw DomainError("multi-index entries must be nonnegative integers");
        m[static_cast<int>(i)] = static_cast<int>(v[i]);
    }
    return m;
}

std::string join(const Vec& v) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ";" : "") << v[i];
    return s.str();
}

// Rows of a CSV or JSON-lines table.
class Table {
public:
    Table(std::ostream& out, bool json, std::vector<std::string> columns)
        : out_(out), json_(json), columns_(std::move(columns)) {
        out_ << std::setprecision(17);
        if (!json_)
            for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i] << (i + 1 == columns_.size() ? "\n" : "");
    }

    void row(const std::vector<nlohmann::json>& cells) {
        if (json_) {
            nlohmann::json j;
            for (std::size_t i = 0; i < columns_.size(); ++i) j[columns_[i]] = cells[i];
            out_ << j.dump() << "\n";
            return;
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            const auto& c = cells[i];
            if (c.is_number_float())
                out_ << c.get<double>();
            else if (c.is_string())
                out_ << c.get<std::string>();
            else
                out_ << c.dump();
        }
        out_ << "\n";
    }

private:
    std::ostream& out_;
    bool json_;
    std::vector<std::string> columns_;
};

// key=value lines; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read config file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        if (trim(line).empty()) continue;
        if (eq == std::string::npos) throw DomainError("config line without '=': " + line);
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

struct Common {
    std::string lambda = "0";
    std::string format = "csv";
    std::string output;
    int order = kDefaultOrder;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--lambda", c.lambda, "type index, comma separated")->capture_default_str();
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app->add_option("--output", c.output, "write to this file instead of stdout");
    app->add_option("--order", c.order, "quadrature order")->check(CLI::Range(2, 512))->capture_default_str();
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    Common common;
    std::string kernel = "heat";
    std::string rep = "extended";
    std::vector<double> t{1.0};
    std::vector<std::string> x, y;
    std::string m, r;
    int k = 0;
    std::string psi = "exp:1";
    std::vector<std::string> atoms;
    std::string route = "closed";
};

LaplaceSymbol parse_symbol(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const double a = colon == std::string::npos ? 1.0 : parse_list(text.substr(colon + 1), "psi parameter")[0];
    if (kind == "exp") return LaplaceSymbol::exponential(a);
    if (kind == "const") return LaplaceSymbol::constant(a);
    throw DomainError("psi must be exp:a or const:c");
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const TypeIndex lam = parse_lambda(a.common.lambda);
    const int n = lam.n();
    if (a.x.size() != a.y.size() || a.x.empty()) throw DomainError("give the same number of --x and --y points");
    const MultiIndex m = parse_multi(a.m, n), r = parse_multi(a.r, n);
    const bool derivative = m.sum() + r.sum() + a.k > 0;
    bool flagged = false;
    Table table(out, a.common.format == "json", {"kernel", "rep", "t", "x", "y", "value", "error"});
    for (std::size_t p = 0; p < a.x.size(); ++p) {
        const Vec x = parse_point(a.x[p], n, "x"), y = parse_point(a.y[p], n, "y");
        require_half_space(x, n, "x");
        require_half_space(y, n, "y");
        auto emit = [&](const std::string& rep, double t, double value, double error) {
            if (!std::isfinite(value)) flagged = true;
            table.row({a.kernel, rep, t, join(x), join(y), value, error});
        };
        if (a.kernel == "heat") {
            for (double t : a.t) {
                if (!(t > 0)) throw DomainError("t must be positive");
                if (derivative) {
                    const double v = kernel_derivative(lam, m, r, a.k, t, x, y, a.common.order);
                    const double v2 = kernel_derivative(lam, m, r, a.k, t, x, y, 2 * a.common.order);
                    emit("extended", t, v, std::abs(v - v2));
                    continue;
                }
                KernelRep rep;
                if (a.rep == "product")
                    rep = KernelRep::Product;
                else if (a.rep == "schlafli")
                    rep = KernelRep::Schlafli;
                else
                    rep = KernelRep::Extended;
                const double v = heat_kernel(rep, lam, t, x, y, a.common.order);
                const double check = rep == KernelRep::Product ? kernel_extended(lam, t, x, y, 2 * a.common.order)
                                                               : kernel_product(lam, t, x, y);
                emit(a.rep, t, v, std::abs(v - check));
            }
        } else if (a.kernel == "poisson") {
            for (double t : a.t) {
                const OpValue v = poisson_kernel(lam, t, x, y, a.common.order);
                flagged |= !v.converged;
                emit("subordination", t, v.value, v.error);
            }
        } else if (a.kernel == "riesz") {
            if (m.sum() == 0) throw DomainError("riesz needs --m with |m| > 0");
            const OpValue v = a.route == "time" ? riesz_kernel_time(lam, m, x, y, a.common.order)
                                                : riesz_kernel_closed(lam, m, x, y, std::min(a.common.order, 64));
            flagged |= !v.converged;
            emit(a.route, 0, v.value, v.error);
        } else if (a.kernel == "laplace") {
            const OpValue v = laplace_mult_kernel(lam, parse_symbol(a.psi), x, y, a.common.order);
            flagged |= !v.converged;
            emit(a.psi, 0, v.value, v.error);
        } else if (a.kernel == "stieltjes") {
            StieltjesMeasure nu;
            for (const auto& atom : a.atoms) {
                const auto v = parse_list(atom, "atom");
                if (v.size() != 3) throw DomainError("atom must be t,re,im");
                nu.atoms.push_back({v[0], {v[1], v[2]}});
            }
            if (nu.atoms.empty()) throw DomainError("stieltjes needs at least one --atom t,re,im");
            const auto v = stieltjes_mult_kernel(lam, nu, x, y, a.common.order);
            table.row({a.kernel, "re", 0.0, join(x), join(y), v.real(), 0.0});
            table.row({a.kernel, "im", 0.0, join(x), join(y), v.imag(), 0.0});
        } else {
            throw DomainError("unknown kernel " + a.kernel);
        }
    }
    return flagged ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------------------

struct FunctionArgs {
    std::string f = "gaussian";
    double sigma = 1;
    std::string center;
};

TestFunction make_function(const FunctionArgs& a, int n) {
    if (a.f == "const") return TestFunction::constant(n);
    if (a.f == "gaussian") {
        const Vec c = a.center.empty() ? Vec::Zero(n) : parse_point(a.center, n, "center");
        return TestFunction::gaussian_at(c, a.sigma);
    }
    throw DomainError("f must be gaussian or const");
}

struct TransformArgs {
    Common common;
    FunctionArgs f;
    std::vector<std::string> x;
    bool twice = false;
    double x_max = 12;
    double panel = 0.5;
    int nodes = 16;
};

int cmd_transform(const TransformArgs& a, std::ostream& out) {
    const TypeIndex lam = parse_lambda(a.common.lambda);
    const int n = lam.n();
    const TestFunction f = make_function(a.f, n);
    if (a.x.empty()) throw DomainError("give at least one --x point");
    Table table(out, a.common.format == "json", {"x", "input", "value", "truncation", "flagged"});
    bool flagged = false;
    std::optional<RadialGridFunction> once;
    if (a.twice) once = hankel_transform_grid(lam, sample(f, make_hankel_grid(lam, a.x_max, a.panel, a.nodes)));
    for (const auto& text : a.x) {
        const Vec x = parse_point(text, n, "x");
        const TransformValue v = a.twice ? hankel_transform(lam, *once, x) : hankel_transform(lam, f, x);
        flagged |= v.flagged;
        table.row({join(x), f(x), v.value, v.truncation, v.flagged});
    }
    return flagged ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------------------

struct ApplyArgs {
    Common common;
    FunctionArgs f;
    std::string op = "heat";
    double t = 1;
    std::vector<std::string> x;
    std::string m;
    int k = 0;
    bool norm = false;
    std::string symbol = "exp:1";
};

Multiplier parse_multiplier(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const double a = colon == std::string::npos ? 1.0 : parse_list(text.substr(colon + 1), "symbol parameter")[0];
    if (kind == "exp") return [a](double z) { return std::complex<double>(std::exp(-a * z * z), 0); };
    if (kind == "imag")
        return [a](double z) { return z > 0 ? std::exp(std::complex<double>(0, 2 * a * std::log(z))) : 0.0; };
    throw DomainError("symbol must be exp:T or imag:a");
}

int cmd_apply(const ApplyArgs& a, std::ostream& out) {
    const TypeIndex lam = parse_lambda(a.common.lambda);
    const int n = lam.n();
    const TestFunction f = make_function(a.f, n);
    const bool json = a.common.format == "json";
    bool flagged = false;
    if (a.op == "g" && a.norm) {
        const MultiIndex m = parse_multi(a.m, n);
        const OpValue v = g_norm_ratio(lam, m[0], a.k, f);
        Table table(out, json, {"op", "quantity", "value", "error"});
        table.row({"g", "norm_ratio", v.value, v.error});
        return v.converged ? kExitOk : kExitNumerical;
    }
    if (a.x.empty()) throw DomainError("give at least one --x point");
    Table table(out, json, {"op", "x", "value", "imag", "error"});
    std::optional<RadialGridFunction> grid;
    if (a.op == "multiplier" || a.op == "poisson") {
        if (a.f.f == "const") throw DomainError("spectral operators need an integrable f");
        grid = sample(f, make_hankel_grid(lam));
    }
    for (const auto& text : a.x) {
        const Vec x = parse_point(text, n, "x");
        if (a.op == "heat") {
            if (!(a.t > 0)) throw DomainError("t must be positive");
            const OpValue v = heat_apply(lam, a.t, f, x);
            flagged |= !v.converged;
            table.row({a.op, join(x), v.value, 0.0, v.error});
        } else if (a.op == "g") {
            const OpValue v = g_apply(lam, parse_multi(a.m, n), a.k, f, x);
            flagged |= !v.converged;
            table.row({a.op, join(x), v.value, 0.0, v.error});
        } else if (a.op == "multiplier" || a.op == "poisson") {
            Multiplier M;
            if (a.op == "poisson") {
                const double t = a.t;
                M = [t](double z) { return std::complex<double>(std::exp(-t * z), 0); };
            } else {
                M = parse_multiplier(a.symbol);
            }
            const auto v = multiplier_apply_spectral(lam, M, *grid, x);
            table.row({a.op, join(x), v.real(), v.imag(), 0.0});
        } else {
            throw DomainError("unknown op " + a.op);
        }
    }
    return flagged ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string format = "json";
    std::string output;
    std::string check;
    bool all = false;
    bool quick = false;
    std::string kernel = "maximal";
    std::string m;
    int k = 0;
    int samples = 0;  // 0: the default of the check
    std::uint64_t seed = 42;
    int threads = 1;
    std::vector<int> dims{1, 2};
    bool no_refine = false;
    int budget = 1 << 14;
    std::string lambda;
};

void emit_reports(std::ostream& out, bool json, const std::vector<EstimateReport>& reports) {
    if (!json) out << EstimateReport::csv_header() << "\n";
    for (const auto& r : reports) out << (json ? r.to_json() : r.to_csv()) << "\n";
}

KernelSpec parse_kernel(const VerifyArgs& a) {
    KernelSpec spec;
    static const std::map<std::string, KernelKind> kinds{{"maximal", KernelKind::Maximal},
                                                         {"g", KernelKind::G},
                                                         {"laplace", KernelKind::Laplace},
                                                         {"stieltjes", KernelKind::Stieltjes},
                                                         {"riesz", KernelKind::Riesz}};
    const auto it = kinds.find(a.kernel);
    if (it == kinds.end()) throw DomainError("unknown kernel " + a.kernel);
    spec.kind = it->second;
    if (!a.m.empty())
        for (double v : parse_list(a.m, "m")) spec.m.push_back(static_cast<int>(v));
    spec.k = a.k;
    return spec;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    if (a.all == !a.check.empty()) throw DomainError("give exactly one of --check or --all");
    const bool json = a.format == "json";
    VerifyOptions o;
    o.seed = a.seed;
    o.threads = a.threads;
    o.dims = a.dims;
    o.refine = !a.no_refine;
    if (a.samples > 0) o.samples = a.samples;
    if (a.quick && a.samples == 0) o.samples = 400;
    for (int n : o.dims)
        if (n < 1 || n > 3) throw DomainError("dims must be in {1,2,3}");

    if (json) {
        nlohmann::json cfg{{"config",
                            {{"check", a.all ? "all" : a.check},
                             {"quick", a.quick},
                             {"kernel", a.kernel},
                             {"m", a.m},
                             {"k", a.k},
                             {"samples", o.samples},
                             {"seed", o.seed},
                             {"threads", o.threads},
                             {"dims", o.dims},
                             {"refine", o.refine},
                             {"omega_order", o.base.omega_order},
                             {"nodes_per_unit", o.base.nodes_per_unit}}}};
        out << cfg.dump() << "\n";
    } else {
        out << "# check=" << (a.all ? "all" : a.check) << " quick=" << a.quick << " kernel=" << a.kernel
            << " m=" << a.m << " k=" << a.k << " samples=" << o.samples << " seed=" << o.seed
            << " refine=" << o.refine << " omega_order=" << o.base.omega_order
            << " nodes_per_unit=" << o.base.nodes_per_unit << "\n";
    }

    std::vector<EstimateReport> reports;
    if (a.all) {
        reports = run_suite(o, a.quick);
    } else if (a.check == "growth" || a.check == "smoothness_x" || a.check == "smoothness_y" ||
               a.check == "gradient" || a.check == "standard") {
        const KernelSpec spec = parse_kernel(a);
        EstimateMask mask{a.check == "growth", a.check == "smoothness_x", a.check == "smoothness_y",
                          a.check == "gradient"};
        if (a.check == "standard") mask = {};
        if (a.check == "gradient" && spec.vector_valued())
            throw DomainError("the gradient estimate applies to scalar kernels");
        reports = check_standard(spec, o, mask);
    } else if (a.check == "bridge") {
        for (int n : o.dims)
            for (const auto& b : bridge_suite(n)) {
                try {
                    reports.push_back(check_bridge(b, o));
                } catch (const DomainError&) {
                }
            }
    } else if (a.check == "upsilon") {
        for (int n : o.dims) {
            auto r = check_upsilon(upsilon_suite(n), o);
            reports.insert(reports.end(), r.begin(), r.end());
        }
    } else if (a.check == "est33") {
        for (int n : o.dims)
            for (const auto& e : est33_suite(n)) reports.push_back(check_est33(e, o));
    } else if (a.check == "measure") {
        reports.push_back(check_measure_equivalence(o));
    } else if (a.check == "theta") {
        reports = check_theta_lemma(a.samples > 0 ? a.samples : 1000000, o.seed, o.threads);
    } else if (a.check == "laplace_constant") {
        reports.push_back(check_laplace_constant(o, a.samples > 0 ? a.samples : 200));
    } else if (a.check == "ball") {
        std::vector<TypeIndex> lams;
        if (!a.lambda.empty())
            lams.push_back(parse_lambda(a.lambda));
        else
            lams = lambda_grid(o.dims, o.lambda_components);
        const auto balls = check_ball_comparability(lams, a.samples > 0 ? a.samples : 200, a.budget, o.seed);
        bool ok = true;
        Table table(out, json, {"check_id", "lambda", "c", "C", "ratio", "drift", "flagged", "passed"});
        for (const auto& b : balls) {
            ok &= b.passed();
            table.row({"ball_comparability", join(b.lam.values()), b.c, b.C, b.C / b.c, b.drift, b.flagged, b.passed()});
        }
        return ok ? kExitOk : kExitVerification;
    } else {
        throw DomainError("unknown check " + a.check);
    }
    emit_reports(out, json, reports);
    for (const auto& r : reports)
        if (!r.passed()) return kExitVerification;
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string format = "csv";
    std::string output;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    if (a.inputs.empty()) throw DomainError("give at least one --input file");
    const bool json = a.format == "json";
    Table table(out, json, {"check_id", "params", "n_samples", "c_emp", "drift", "violations", "passed"});
    long total = 0, failed = 0;
    for (const auto& path : a.inputs) {
        std::ifstream in(path);
        if (!in) throw DomainError("cannot read " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception&) {
                throw DomainError("not a JSON record in " + path + ": " + line.substr(0, 60));
            }
            if (!j.contains("check_id")) continue;  // provenance header
            ++total;
            const bool passed = j.value("passed", false);
            failed += !passed;
            table.row({j["check_id"], j.value("params", ""), j.value("n_samples", 0L), j.value("c_emp", 0.0),
                       j.value("drift", 0.0), j.value("violations", 0L), passed});
        }
    }
    if (!json) out << "# records=" << total << " failed=" << failed << "\n";
    return failed ? kExitVerification : kExitOk;
}

// Config tokens for options of `sub` that the command line leaves unset.
std::vector<std::string> config_tokens(const std::map<std::string, std::string>& config, CLI::App* sub,
                                       const std::vector<std::string>& args) {
    std::vector<std::string> out;
    for (const auto& [key, value] : config) {
        const std::string flag = "--" + key;
        if (!sub->get_option_no_throw(flag)) continue;
        bool given = false;
        for (const auto& a : args) given |= a == flag || a.rfind(flag + "=", 0) == 0;
        if (given) continue;
        out.push_back(flag + "=" + value);
    }
    return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args_in, std::ostream& out_default, std::ostream& err) {
    CLI::App app{"Bessel heat kernels, operator kernels and estimate verification"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key=value config file (default: $BESSELCZ_CONFIG)");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "evaluate a kernel or a derivative of the heat kernel");
    add_common(eval, ev.common);
    eval->add_option("--kernel", ev.kernel)->check(CLI::IsMember({"heat", "poisson", "riesz", "laplace", "stieltjes"}))->capture_default_str();
    eval->add_option("--rep", ev.rep)->check(CLI::IsMember({"product", "schlafli", "extended"}))->capture_default_str();
    eval->add_option("--t", ev.t, "times (heat, poisson)")->delimiter(',');
    eval->add_option("--x", ev.x, "points, comma separated coordinates; repeat for more");
    eval->add_option("--y", ev.y, "points paired with --x");
    eval->add_option("--m", ev.m, "x-derivative (heat) or Riesz multi-index");
    eval->add_option("--r", ev.r, "y-derivative multi-index");
    eval->add_option("--k", ev.k, "t-derivative order")->check(CLI::NonNegativeNumber);
    eval->add_option("--psi", ev.psi, "Laplace symbol: exp:a or const:c")->capture_default_str();
    eval->add_option("--atom", ev.atoms, "Stieltjes atom t,re,im; repeat for more");
    eval->add_option("--route", ev.route, "Riesz route")->check(CLI::IsMember({"time", "closed"}))->capture_default_str();

    TransformArgs tr;
    auto* transform = app.add_subcommand("transform", "Hankel transform of a test function");
    add_common(transform, tr.common);
    transform->add_option("--f", tr.f.f)->check(CLI::IsMember({"gaussian", "const"}))->capture_default_str();
    transform->add_option("--sigma", tr.f.sigma)->check(CLI::PositiveNumber)->capture_default_str();
    transform->add_option("--center", tr.f.center);
    transform->add_option("--x", tr.x, "evaluation points");
    transform->add_flag("--twice", tr.twice, "transform twice through a grid");
    transform->add_option("--x-max", tr.x_max)->check(CLI::PositiveNumber)->capture_default_str();
    transform->add_option("--panel", tr.panel)->check(CLI::PositiveNumber)->capture_default_str();
    transform->add_option("--nodes", tr.nodes)->check(CLI::Range(2, 64))->capture_default_str();

    ApplyArgs ap;
    auto* apply = app.add_subcommand("apply", "apply W_t, g_{m,k}, a spectral multiplier or P_t to a test function");
    add_common(apply, ap.common);
    apply->add_option("--op", ap.op)->check(CLI::IsMember({"heat", "g", "multiplier", "poisson"}))->capture_default_str();
    apply->add_option("--f", ap.f.f)->check(CLI::IsMember({"gaussian", "const"}))->capture_default_str();
    apply->add_option("--sigma", ap.f.sigma)->check(CLI::PositiveNumber)->capture_default_str();
    apply->add_option("--center", ap.f.center);
    apply->add_option("--t", ap.t)->capture_default_str();
    apply->add_option("--x", ap.x, "evaluation points");
    apply->add_option("--m", ap.m);
    apply->add_option("--k", ap.k)->check(CLI::NonNegativeNumber);
    apply->add_flag("--norm", ap.norm, "g: print ||g f||_2 / ||f||_2 (n = 1)");
    apply->add_option("--symbol", ap.symbol, "multiplier: exp:T or imag:a")->capture_default_str();

    VerifyArgs ve;
    auto* verify = app.add_subcommand("verify", "run verification checks");
    verify->add_option("--check", ve.check,
                       "growth, smoothness_x, smoothness_y, gradient, standard, bridge, upsilon, est33, measure, "
                       "theta, laplace_constant, ball");
    verify->add_flag("--all", ve.all, "the full suite");
    verify->add_flag("--quick", ve.quick, "reduced sample counts");
    verify->add_option("--kernel", ve.kernel)->check(CLI::IsMember({"maximal", "g", "laplace", "stieltjes", "riesz"}))->capture_default_str();
    verify->add_option("--m", ve.m);
    verify->add_option("--k", ve.k)->check(CLI::NonNegativeNumber);
    verify->add_option("--samples", ve.samples)->check(CLI::NonNegativeNumber);
    verify->add_option("--seed", ve.seed)->capture_default_str();
    verify->add_option("--threads", ve.threads)->check(CLI::Range(1, 256))->capture_default_str();
    verify->add_option("--dims", ve.dims)->delimiter(',');
    verify->add_flag("--no-refine", ve.no_refine, "skip the refined run");
    verify->add_option("--budget", ve.budget, "ball: QMC points per estimate")->check(CLI::PositiveNumber)->capture_default_str();
    verify->add_option("--lambda", ve.lambda, "ball: a single type index");
    verify->add_option("--format", ve.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    verify->add_option("--output", ve.output);

    ReportArgs re;
    auto* report = app.add_subcommand("report", "summarise JSON-lines verification output");
    report->add_option("--input", re.inputs, "JSON-lines files");
    report->add_option("--format", re.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    report->add_option("--output", re.output);

    std::vector<std::string> args = args_in;
    try {
        // The config file only fills options of the chosen verb left unset on the command line.
        // --config may appear anywhere, so it is taken out before parsing.
        std::string path;
        for (std::size_t i = 0; i < args.size();) {
            if (args[i] == "--config" && i + 1 < args.size()) {
                path = args[i + 1];
                args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            } else if (args[i].rfind("--config=", 0) == 0) {
                path = args[i].substr(9);
                args.erase(args.begin() + static_cast<long>(i));
            } else {
                ++i;
            }
        }
        if (path.empty())
            if (const char* env = std::getenv("BESSELCZ_CONFIG")) path = env;
        if (!path.empty()) {
            const auto config = read_config(path);
            for (std::size_t i = 0; i < args.size(); ++i) {
                CLI::App* sub = app.get_subcommand_no_throw(args[i]);
                if (!sub) continue;
                const auto extra = config_tokens(config, sub, args);
                args.insert(args.begin() + static_cast<long>(i) + 1, extra.begin(), extra.end());
                break;
            }
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int code = app.exit(e, o, e2);
        out_default << o.str();
        err << e2.str();
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    auto with_output = [&](const std::string& path, auto&& body) {
        if (path.empty()) return body(out_default);
        std::ofstream file(path);
        if (!file) throw DomainError("cannot write " + path);
        return body(file);
    };
    try {
        if (*eval) return with_output(ev.common.output, [&](std::ostream& o) { return cmd_eval(ev, o); });
        if (*transform) return with_output(tr.common.output, [&](std::ostream& o) { return cmd_transform(tr, o); });
        if (*apply) return with_output(ap.common.output, [&](std::ostream& o) { return cmd_apply(ap, o); });
        if (*verify) return with_output(ve.output, [&](std::ostream& o) { return cmd_verify(ve, o); });
        if (*report) return with_output(re.output, [&](std::ostream& o) { return cmd_report(re, o); });
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}

}  // namespace besselcz
