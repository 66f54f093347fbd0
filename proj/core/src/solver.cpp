#include "hsrecon/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <Eigen/SVD>

#include "hsrecon/errors.hpp"
#include "hsrecon/svt.hpp"

namespace hsrecon {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t nanoseconds_since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

void check_conforming(const ForwardOperator& op, const RgbImage& x, const SpectralCube* y) {
    if (y == nullptr) return;
    if (y->bands() != op.bands()) throw DimensionError("cube bands do not match operator");
    if (y->pixels() != x.pixels()) throw DimensionError("cube and RGB pixel counts differ");
}

LrspConfig stage_lrsp_config(const SolverConfig& config, Index d, Index n, double eta) {
    if (!config.exactness_regime) return config.lrsp;
    LrspConfig c = LrspConfig::exactness(d, n, config.lambda * eta);
    c.seed = config.lrsp.seed;
    return c;
}

}  // namespace

InitMode parse_init_mode(std::string_view name) {
    if (name == "zeros") return InitMode::zeros;
    if (name == "adjoint") return InitMode::adjoint;
    if (name == "pseudoinverse" || name == "pinv") return InitMode::pseudoinverse;
    throw PreconditionError("unknown init mode '" + std::string(name) + "'");
}

std::string to_string(InitMode mode) {
    switch (mode) {
        case InitMode::zeros: return "zeros";
        case InitMode::adjoint: return "adjoint";
        case InitMode::pseudoinverse: return "pseudoinverse";
    }
    return "unknown";
}

void SolverConfig::validate() const {
    if (stages < 1) throw PreconditionError("SolverConfig: stages must be >= 1");
    if (!eta.empty() && eta.size() != 1 && static_cast<Index>(eta.size()) != stages) {
        throw PreconditionError("SolverConfig: eta needs 0, 1 or `stages` values");
    }
    for (double e : eta) {
        if (!(e > 0.0) || !std::isfinite(e)) throw PreconditionError("SolverConfig: eta must be > 0");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw PreconditionError("SolverConfig: lambda must be >= 0");
    }
    if (!(memory_decay >= 0.0 && memory_decay < 1.0)) {
        throw PreconditionError("SolverConfig: memory_decay must lie in [0, 1)");
    }
    if (!(divergence_factor > 1.0)) {
        throw PreconditionError("SolverConfig: divergence_factor must be > 1");
    }
}

SpectralCube gradient_step(const SpectralCube& y, const ForwardOperator& op, const RgbImage& x,
                           double eta) {
    check_conforming(op, x, &y);
    if (!(eta > 0.0)) throw PreconditionError("gradient_step: eta must be > 0");
    const Matrix residual = op.phi() * y.data() - x.data();
    return SpectralCube(y.data() - eta * (op.phi().transpose() * residual), y.height(), y.width());
}

Matrix pseudoinverse(const ForwardOperator& op) {
    Eigen::JacobiSVD<Matrix> svd(op.phi(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double tol = sv.size() == 0 ? 0.0
                                      : static_cast<double>(std::max(op.phi().rows(), op.phi().cols())) *
                                            std::numeric_limits<double>::epsilon() * sv[0];
    Vector inv = Vector::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > tol) inv[i] = 1.0 / sv[i];
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

SpectralCube initialize(const RgbImage& x, const ForwardOperator& op, InitMode mode) {
    switch (mode) {
        case InitMode::zeros: return SpectralCube::zeros(op.bands(), x.height(), x.width());
        case InitMode::adjoint: return apply_phi_adjoint(op, x);
        case InitMode::pseudoinverse:
            return SpectralCube(pseudoinverse(op) * x.data(), x.height(), x.width());
    }
    throw PreconditionError("initialize: unknown mode");
}

double data_fidelity(const SpectralCube& y, const ForwardOperator& op, const RgbImage& x) {
    check_conforming(op, x, &y);
    return 0.5 * (op.phi() * y.data() - x.data()).squaredNorm();
}

double objective(const SpectralCube& y, const ForwardOperator& op, const RgbImage& x,
                 double lambda, TransformKind kind) {
    const double fidelity = data_fidelity(y, op, x);
    if (lambda == 0.0) return fidelity;
    return fidelity + lambda * nuclear_norm(analyze(y, kind));
}

std::vector<double> resolve_step_sizes(const SolverConfig& config, const ForwardOperator& op) {
    config.validate();
    const auto stages = static_cast<std::size_t>(config.stages);
    if (config.eta.empty()) {
        const double lipschitz = spectral_norm_sq(op);
        if (!(lipschitz > 0.0)) {
            throw NumericError("auto step size needs a nonzero forward operator");
        }
        return std::vector<double>(stages, 1.0 / lipschitz);
    }
    if (config.eta.size() == 1) return std::vector<double>(stages, config.eta.front());
    return config.eta;
}

SolveResult unfold_solve(const RgbImage& x, const ForwardOperator& op, const SolverConfig& config) {
    const auto start = Clock::now();
    config.validate();
    const std::vector<double> etas = resolve_step_sizes(config, op);

    SolveReport report;
    report.lipschitz = spectral_norm_sq(op);

    SpectralCube y = initialize(x, op, config.init);
    const Index d = y.bands();
    const Index n = y.pixels();
    if (!config.exactness_regime) config.lrsp.validate(d, n);

    report.initial_objective = objective(y, op, x, config.lambda, config.transform);
    const double data_scale = 0.5 * x.data().squaredNorm();
    double best = report.initial_objective;
    std::vector<double> history{report.initial_objective};

    LrspState state = LrspState::initial(config.lrsp, config.memory_decay);
    if (config.exactness_regime) state.beta = LrspConfig::exactness(d, n, 0.0).beta1;

    for (Index k = 1; k <= config.stages; ++k) {
        const auto stage_start = Clock::now();
        const double eta = etas[static_cast<std::size_t>(k - 1)];
        const LrspConfig stage_config = stage_lrsp_config(config, d, n, eta);

        const Matrix residual = op.phi() * y.data() - x.data();
        const Matrix r_k = y.data() - eta * (op.phi().transpose() * residual);
        if (!r_k.allFinite()) throw StageError("gradient step produced non-finite values", k);

        const SpectralCube r_cube(r_k, y.height(), y.width());
        const Matrix u_k = analyze(r_cube, config.transform);
        LrspResult prox = lrsp_apply(u_k, stage_config, state);
        if (!prox.output.allFinite()) throw StageError("proximal step produced non-finite values", k);

        y = synthesize(prox.output, config.transform, y.height(), y.width());
        state = std::move(prox.state);

        StageRecord rec;
        rec.stage = k;
        rec.eta = eta;
        rec.theta = stage_config.theta;
        rec.fidelity = data_fidelity(y, op, x);
        rec.objective = objective(y, op, x, config.lambda, config.transform);
        rec.lrsp = std::move(prox.diagnostics);
        rec.elapsed_ns = nanoseconds_since(stage_start);
        if (!std::isfinite(rec.objective)) throw StageError("objective is not finite", k);

        history.push_back(rec.objective);
        if (rec.objective > config.divergence_factor * std::max(best, data_scale)) {
            throw DivergenceError("objective grew beyond " + std::to_string(config.divergence_factor) +
                                      "x its reference; step size too large?",
                                  k, history);
        }
        best = std::min(best, rec.objective);
        report.stages.push_back(std::move(rec));
    }
    report.elapsed_ns = nanoseconds_since(start);
    return SolveResult{std::move(y), std::move(report)};
}

void SolveReport::write_csv(std::ostream& out) const {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << "stage,objective,fidelity,elapsed_ns\n" << std::setprecision(17);
    for (const auto& s : stages) {
        out << s.stage << ',' << s.objective << ',' << s.fidelity << ',' << s.elapsed_ns << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

void SolveReport::write_diagnostics(std::ostream& out) const {
    write_lrsp_diagnostics_header(out);
    for (const auto& s : stages) write_lrsp_diagnostics(out, s.stage, s.lrsp);
}

}  // namespace hsrecon
