#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hsrecon/svt.hpp"
#include "hsrecon/types.hpp"

namespace hsrecon {

/// Parameters of the low-rank subspace proximal operator.
///
/// Defaults are a reasonable subspace configuration for d around 16..64; use
/// exactness() to obtain the configuration under which the operator reproduces
/// full singular-value thresholding.
struct LrspConfig {
    Index rank = 8;          ///< target subspace rank r
    Index kappa = 64;        ///< column budget
    Index probes = 8;        ///< Gaussian probe count for the residual estimate
    Index inner_steps = 3;   ///< proposals per call, T
    double tau0 = 1.0;       ///< initial soft-top temperature
    double gamma = 0.5;      ///< temperature decay, in (0, 1)
    double tau_min = 0.1;    ///< temperature floor
    double beta1 = 1.0;      ///< initial cumulative gate logit
    double c_beta = 0.5;     ///< gate increment coefficient
    double nu = 5.0;         ///< fusion sharpness
    double theta = 0.0;      ///< singular-value threshold inside the subspace
    std::uint64_t seed = 0;
    double eps = 1e-12;      ///< residual-ratio denominator guard

    /// Throws PreconditionError unless r <= kappa <= n, r <= d and schedules are in range.
    void validate(Index d, Index n) const;

    /// kappa = n, r = d, one inner step, gate saturated (sigmoid(beta1) == 1.0 in double).
    static LrspConfig exactness(Index d, Index n, double theta);
};

/// Cross-call state: cumulative gate logit and the EMA of column importances.
struct LrspState {
    double beta = 1.0;
    Vector memory_g;   ///< empty until the first call; then length n, entries in [0, 1]
    double mu = 0.5;   ///< EMA decay in [0, 1)

    static LrspState initial(const LrspConfig& config, double mu = 0.5);
};

/// Hard column choice with soft magnitudes: column j of the sketch is
/// weights[j] * u[:, indices[j]].
struct Selector {
    std::vector<Index> indices;
    Vector weights;
};

struct Subspace {
    Matrix basis;               ///< d x r, orthonormal columns
    Index sketch_rank = 0;      ///< numerical rank detected in the sketch (capped at r)
    Index completed_columns = 0;///< trailing columns filled from seeded random directions
};

struct Refinement {
    double rho_hat = 0.0;
    double delta_beta = 0.0;
};

struct LrspStepDiagnostics {
    Index t = 0;
    double tau = 0.0;
    double beta = 0.0;       ///< gate logit used for this step
    double alpha = 0.0;      ///< sigmoid(beta)
    double rho_tilde = 0.0;
    double rho_hat = 0.0;
    double delta_beta = 0.0;
    double weight = 0.0;     ///< fusion weight
    double pooled_norm = 0.0;
    Index sketch_rank = 0;
    Index completed_columns = 0;
    std::int64_t elapsed_ns = 0;
};

struct LrspDiagnostics {
    std::vector<LrspStepDiagnostics> steps;
    double effective_alpha = 0.0;   ///< fusion-weighted mean gate
    std::int64_t elapsed_ns = 0;
};

struct LrspResult {
    Matrix output;
    LrspState state;
    LrspDiagnostics diagnostics;
};

double logistic(double x) noexcept;
double softplus(double x) noexcept;

/// Sigmoid of standardized column norms, blended with state.memory_g by state.mu.
Vector column_importance(const Matrix& u, const LrspState& state);

/// Linear column scores <P u_i, q> from a seeded random projection (m = min(d, 16)).
Vector score_columns(const Matrix& u, std::uint64_t seed);

/// Softplus-normalized weights relative to the (kappa+1)-th largest score.
/// Requires 1 <= kappa < n and tau > 0.
Vector soft_topk(const Vector& scores, Index kappa, double tau);

/// Top-kappa entries of w (ties to the lower index), weighted by g * w.
Selector build_selector(const Vector& g, const Vector& w, Index kappa);

/// The d x kappa matrix u * Omega.
Matrix selector_sketch(const Matrix& u, const Selector& omega);

/// First r columns of a column-pivoted QR of the sketch; rank-deficient sketches are
/// completed with orthonormalized seeded Gaussian directions.
Subspace orthonormal_subspace(const Matrix& u, const Selector& omega, Index r,
                              std::uint64_t seed = 0);

/// ||(I - Q Q^T) U G||_F / (||U G||_F + eps) with G = Diag(g) Xi, Xi seeded n x probes.
double residual_ratio(const Matrix& u, const Matrix& q, const Vector& g, Index probes,
                      std::uint64_t seed, double eps);

/// Deterministic refinement: rho_hat = rho_tilde, delta_beta = c_beta (1 - rho_tilde).
/// `pooled` is accepted for interface parity and does not influence the result.
Refinement refine_and_increment(double rho_tilde, const Vector& pooled, const LrspConfig& config);

/// Sum of selected columns scaled by their selector weights.
Vector sparse_pool(const Matrix& u, const Selector& omega);

/// max(tau_min, tau0 * gamma^(t-1)), t >= 1.
double temperature(Index t, const LrspConfig& config);

/// Q ((1 - a) B + a SVT_theta(B)) with B = Q^T u and a = sigmoid(beta).
Matrix subspace_proximal(const Matrix& u, const Matrix& q, ShrinkageThreshold theta, double beta);

/// Softmin of nu * rho_hat; sums to one.
Vector fusion_weights(std::span<const double> rho_hats, double nu);

Matrix fuse_proposals(std::span<const Matrix> proposals, std::span<const double> rho_hats,
                      double nu);

/// Runs config.inner_steps proposals and fuses them; advances state.beta and state.memory_g.
LrspResult lrsp_apply(const Matrix& u, const LrspConfig& config, const LrspState& state);

/// Line-oriented record per inner step: stage,t,tau,beta,rho_hat,w,elapsed_ns
void write_lrsp_diagnostics_header(std::ostream& out);
void write_lrsp_diagnostics(std::ostream& out, Index stage, const LrspDiagnostics& diagnostics);

}  // namespace hsrecon
