// Empirical verification of kernel estimates: stratified sampling of point
// configurations, ratio reports LHS/RHS with refinement drift, and exact
// inequality counts.

#ifndef BESSELCZ_VERIFIER_HPP
#define BESSELCZ_VERIFIER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "besselcz/geometry.hpp"
#include "besselcz/operators.hpp"

namespace besselcz {

enum class Regime { NearDiagonal = 0, FarField = 1, NearBoundary = 2, Generic = 3 };
const char* to_string(Regime r);

struct SampleConfig {
    TypeIndex lam;
    Vec x, y;
    std::optional<Vec> x_prime, y_prime;
    Regime regime = Regime::Generic;
};

struct SampleOptions {
    bool x_prime = false;
    bool y_prime = false;
    int rejection_budget = 10000;
};

/// Deterministic in (lam_grid, seed); sample i depends only on (seed, i), so a
/// longer list extends a shorter one. Regime of sample i is i mod 4.
std::vector<SampleConfig> sample_configs(const std::vector<TypeIndex>& lam_grid, int count, std::uint64_t seed,
                                         SampleOptions options = {});

/// All n-tuples with entries from `components`, for each n in `dims`.
std::vector<TypeIndex> lambda_grid(const std::vector<int>& dims, const std::vector<double>& components);

struct EstimateReport {
    std::string check_id;
    std::string params;
    long n_samples = 0;
    double c_emp = 0;       // max LHS/RHS (or max violation measure for exact checks)
    double c_min = 0;       // min LHS/RHS, reported by two-sided checks
    long argmax = -1;       // sample index of c_emp
    std::string argmax_desc;
    std::string refined_argmax_desc;  // argmax of the refined run
    double drift = 0;       // relative change of c_emp under refinement
    long violations = 0;
    bool exact = false;     // exact inequality: pass iff violations == 0
    bool two_sided = false;
    long unconverged = 0;   // samples whose quadrature flagged non-convergence
    double drift_limit = 0.10;

    bool finite() const;
    bool passed() const;
    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv() const;
};

/// Discretisation levels for the refinement test.
struct Resolution {
    int omega_order = 16;
    int nodes_per_unit = 3;  // time nodes per unit of log t
    Resolution doubled() const { return {2 * omega_order, 2 * nodes_per_unit}; }
};

struct VerifyOptions {
    int samples = 10000;
    std::uint64_t seed = 42;
    int threads = 1;
    Resolution base;
    std::vector<int> dims{1, 2};
    std::vector<double> lambda_components{-0.45, -0.25, 0, 0.5, 1, 2.5};
    bool refine = true;  // also run 4x samples at doubled resolution
};

enum class KernelKind { Maximal, G, Laplace, Stieltjes, Riesz };

struct KernelSpec {
    KernelKind kind = KernelKind::Maximal;
    std::vector<int> m;  // derivative pattern, padded with zeros to n
    int k = 0;

    std::string id() const;
    bool vector_valued() const { return kind == KernelKind::Maximal || kind == KernelKind::G; }
    /// Kernels used by the full suite: W, G at (e1,0),(0,1),(e1,1), K_psi with
    /// psi = e^{-t}, K_nu with two complex atoms, R at e1, 2e1, e1+e2.
    static std::vector<KernelSpec> standard_suite();
};

/// Which of the standard estimates to evaluate in one shared pass.
struct EstimateMask {
    bool growth = true;
    bool smooth_x = true;
    bool smooth_y = true;
    bool gradient = true;
};

/// (gr), (sm1), (sm2) and, for scalar kernels, (grad), from one pass over the
/// samples. Only the requested reports are returned.
std::vector<EstimateReport> check_standard(const KernelSpec& kernel, const VerifyOptions& options,
                                           EstimateMask mask = {});

EstimateReport check_growth(const KernelSpec& kernel, const VerifyOptions& options);
EstimateReport check_smoothness_x(const KernelSpec& kernel, const VerifyOptions& options);
EstimateReport check_smoothness_y(const KernelSpec& kernel, const VerifyOptions& options);
EstimateReport check_gradient(const KernelSpec& kernel, const VerifyOptions& options);

/// (x+y)^{2 xi} int q^{-n/2-|lambda|-|xi|} dOmega_{lambda+xi+kappa} against 1/V(x,|x-y|).
struct BridgeParams {
    Vec xi, kappa;
    std::string describe() const;
};
EstimateReport check_bridge(const BridgeParams& params, const VerifyOptions& options);
/// The instantiations xi = 2eps - theta/2 - rho/2, kappa = 1 - eps + theta/2 + rho/2
/// for representative (eps, theta, rho), and xi = kappa = 0 on lambda >= 0.
std::vector<BridgeParams> bridge_suite(int n);

struct UpsilonParams {
    Eigen::VectorXi eps, theta, rho;
    double u = 0;
    double p = 1;  // 1, 2 or infinity
    double W = 1;
    double C = 0.25;
    std::string describe() const;
};
std::vector<UpsilonParams> upsilon_suite(int n);
/// One report per parameter tuple; tuples sharing (eps, C) share their Omega integrals.
std::vector<EstimateReport> check_upsilon(const std::vector<UpsilonParams>& params, const VerifyOptions& options);

struct Est33Params {
    Eigen::VectorXi eps;
    MultiIndex m, r;
    int k = 0;
    std::string describe() const;
};
std::vector<Est33Params> est33_suite(int n);
/// Pointwise |term-list value| / majorant over random (x, y, t, s).
EstimateReport check_est33(const Est33Params& params, const VerifyOptions& options);

/// |z-y| V(z,|z-y|) / (|x-y| V(x,|x-y|)) on |x-y| > 2|x-z|; two-sided.
EstimateReport check_measure_equivalence(const VerifyOptions& options);

/// Exact inequalities over constrained samples: q >= |x-y|^2 and
/// q(x,y,s)/4 <= q(z,y,s) <= 4 q(x,y,s) for |x-y| > 2|x-z| (and the y mirror).
std::vector<EstimateReport> check_theta_lemma(long samples, std::uint64_t seed, int threads = 1);

/// |K_psi(x,y)| for psi = 1 at |x-y| >= 1/2; exact check with tolerance 1e-8.
EstimateReport check_laplace_constant(const VerifyOptions& options, int samples = 200);

/// mu(B(x,R)) / V(x,R) per lambda: [c, C], C/c < 100, drift of c and C under 4x budget.
struct BallReport {
    TypeIndex lam;
    double c = 0, C = 0;
    double drift = 0;
    long flagged = 0;
    long samples = 0;
    bool passed() const { return C / c < 100 && drift < 0.05; }
};
std::vector<BallReport> check_ball_comparability(const std::vector<TypeIndex>& lams, int samples, int budget,
                                                 std::uint64_t seed);

/// All reports of the suite; quick mode uses fewer samples and skips refinement
/// of the expensive checks.
std::vector<EstimateReport> run_suite(const VerifyOptions& options, bool quick);

}  // namespace besselcz

#endif  // BESSELCZ_VERIFIER_HPP
