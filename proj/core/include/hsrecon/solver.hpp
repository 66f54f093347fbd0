#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hsrecon/forward_model.hpp"
#include "hsrecon/lrsp.hpp"
#include "hsrecon/transform.hpp"
#include "hsrecon/types.hpp"

namespace hsrecon {

enum class InitMode { zeros, adjoint, pseudoinverse };

InitMode parse_init_mode(std::string_view name);
std::string to_string(InitMode mode);

struct SolverConfig {
    Index stages = 3;
    /// Empty: auto, eta = 1 / sigma_max(Phi)^2 at every stage. One value: used for all
    /// stages. Otherwise exactly one value per stage.
    std::vector<double> eta;
    double lambda = 0.01;
    TransformKind transform = TransformKind::spectral_dct;
    LrspConfig lrsp;
    InitMode init = InitMode::pseudoinverse;
    /// Replace `lrsp` at each stage by LrspConfig::exactness(d, n, lambda * eta_k), which
    /// turns every stage into one exact proximal-gradient (ISTA) step.
    bool exactness_regime = false;
    double memory_decay = 0.5;
    /// A stage whose objective exceeds this multiple of max(best objective so far,
    /// 0.5 ||X||_F^2) is reported as divergence.
    double divergence_factor = 10.0;

    void validate() const;
};

struct StageRecord {
    Index stage = 0;
    double eta = 0.0;
    double theta = 0.0;
    double objective = 0.0;
    double fidelity = 0.0;
    std::int64_t elapsed_ns = 0;
    LrspDiagnostics lrsp;
};

struct SolveReport {
    double lipschitz = 0.0;          ///< sigma_max(Phi)^2
    double initial_objective = 0.0;  ///< objective at Y_0
    std::vector<StageRecord> stages;
    std::int64_t elapsed_ns = 0;

    /// stage,objective,fidelity,elapsed_ns
    void write_csv(std::ostream& out) const;
    /// stage,t,tau,beta,rho_hat,w,elapsed_ns for every inner step of every stage.
    void write_diagnostics(std::ostream& out) const;
};

struct SolveResult {
    SpectralCube estimate;
    SolveReport report;
};

/// R = Y - eta Phi^T (Phi Y - X).
SpectralCube gradient_step(const SpectralCube& y, const ForwardOperator& op, const RgbImage& x,
                           double eta);

SpectralCube initialize(const RgbImage& x, const ForwardOperator& op, InitMode mode);

/// Moore-Penrose inverse of Phi from its SVD (B x 3).
Matrix pseudoinverse(const ForwardOperator& op);

/// 0.5 ||Phi Y - X||_F^2
double data_fidelity(const SpectralCube& y, const ForwardOperator& op, const RgbImage& x);

/// 0.5 ||Phi Y - X||_F^2 + lambda ||analyze(Y)||_*
double objective(const SpectralCube& y, const ForwardOperator& op, const RgbImage& x,
                 double lambda, TransformKind kind);

/// Per-stage step sizes after resolving `auto` and broadcasting.
std::vector<double> resolve_step_sizes(const SolverConfig& config, const ForwardOperator& op);

/// K stages of gradient step, analysis, low-rank subspace proximal, synthesis and
/// memory update. Throws StageError on non-finite iterates and DivergenceError when the
/// objective runs away.
SolveResult unfold_solve(const RgbImage& x, const ForwardOperator& op, const SolverConfig& config);

}  // namespace hsrecon
