#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hsrecon/data_io.hpp"
#include "hsrecon/errors.hpp"
#include "hsrecon/metrics.hpp"
#include "hsrecon/solver.hpp"
#include "oracles.hpp"

namespace {

using namespace hsrecon;

struct Problem {
    ForwardOperator op;
    SpectralCube truth;
    RgbImage x;
};

Problem random_problem(Index b, Index h, Index w, std::uint64_t seed, double noise = 0.0) {
    ForwardOperator op(oracle::random_uniform(3, b, seed));
    SpectralCube truth(oracle::random_uniform(b, h * w, seed + 1), h, w);
    Matrix xm = op.phi() * truth.data();
    if (noise > 0) xm += noise * oracle::random_normal(3, h * w, seed + 2);
    return {op, truth, RgbImage(xm, h, w)};
}

Problem scene_problem() {
    SceneSpec spec;
    spec.bands = 16;
    spec.height = 24;
    spec.width = 24;
    spec.rank = 4;
    spec.seed = 7;
    const SpectralCube truth = synth_scene(spec);
    const Sensitivity s = synth_css(16);
    const Illuminant ell = flat_illuminant(16);
    ForwardOperator op = make_phi(s, ell);
    RgbImage x = apply_phi(op, truth);
    return {op, truth, x};
}

SolverConfig exact_config(Index stages, double lambda) {
    SolverConfig c;
    c.stages = stages;
    c.lambda = lambda;
    c.exactness_regime = true;
    return c;
}

TEST(InitModes, Parse) {
    EXPECT_EQ(parse_init_mode("zeros"), InitMode::zeros);
    EXPECT_EQ(parse_init_mode("adjoint"), InitMode::adjoint);
    EXPECT_EQ(parse_init_mode("pseudoinverse"), InitMode::pseudoinverse);
    EXPECT_THROW(parse_init_mode("random"), PreconditionError);
    EXPECT_EQ(to_string(InitMode::adjoint), "adjoint");
}

TEST(GradientStep, FixedPointWhenConsistent) {
    const Problem p = random_problem(6, 3, 4, 1);
    const SpectralCube r = gradient_step(p.truth, p.op, p.x, 0.3);
    EXPECT_LE((r.data() - p.truth.data()).norm(), 1e-14 * p.truth.data().norm());
}

TEST(GradientStep, FromZero) {
    const Problem p = random_problem(6, 3, 4, 2);
    const SpectralCube r = gradient_step(SpectralCube::zeros(6, 3, 4), p.op, p.x, 0.7);
    EXPECT_LE((r.data() - 0.7 * p.op.phi().transpose() * p.x.data()).norm(), 1e-14 * r.data().norm());
}

TEST(GradientStep, MatchesNaiveAlgebra) {
    const Matrix phi = oracle::random_normal(3, 9, 3);
    const Matrix y = oracle::random_normal(9, 20, 4);
    const Matrix xm = oracle::random_normal(3, 20, 5);
    const double eta = 0.11;
    const Matrix resid = oracle::naive_matmul(phi, y) - xm;
    const Matrix expected = y - eta * oracle::naive_matmul(phi.transpose(), resid);
    const SpectralCube r = gradient_step(SpectralCube(y, 4, 5), ForwardOperator(phi), RgbImage(xm, 4, 5), eta);
    EXPECT_LE((r.data() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradientStep, Errors) {
    const Problem p = random_problem(6, 3, 4, 6);
    EXPECT_THROW(gradient_step(SpectralCube::zeros(5, 3, 4), p.op, p.x, 0.1), DimensionError);
    EXPECT_THROW(gradient_step(SpectralCube::zeros(6, 2, 6), p.op, RgbImage(Matrix::Zero(3, 11), 1, 11), 0.1),
                 DimensionError);
    EXPECT_THROW(gradient_step(p.truth, p.op, p.x, 0.0), PreconditionError);
}

TEST(Initialize, Modes) {
    Matrix phi = Matrix::Zero(3, 7);
    phi.leftCols(3).setIdentity();
    const ForwardOperator op(phi);
    const RgbImage x(oracle::random_normal(3, 12, 7), 3, 4);
    EXPECT_TRUE(initialize(x, op, InitMode::zeros).data().isZero(0.0));
    const SpectralCube pinv = initialize(x, op, InitMode::pseudoinverse);
    EXPECT_LE((pinv.data().topRows(3) - x.data()).norm(), 1e-14);
    EXPECT_TRUE(pinv.data().bottomRows(4).isZero(1e-15));
    EXPECT_EQ(initialize(x, op, InitMode::adjoint).data(), phi.transpose() * x.data());
}

TEST(Initialize, PseudoinverseReproducesObservation) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Problem p = random_problem(12, 4, 4, 100 + seed, 0.05);
        const SpectralCube y0 = initialize(p.x, p.op, InitMode::pseudoinverse);
        EXPECT_LE((p.op.phi() * y0.data() - p.x.data()).norm(), 1e-8 * p.x.data().norm());
    }
}

TEST(Pseudoinverse, MoorePenroseConditions) {
    const Matrix phi = oracle::random_normal(3, 8, 8);
    const Matrix pinv = pseudoinverse(ForwardOperator(phi));
    EXPECT_LE((phi * pinv * phi - phi).norm(), 1e-12);
    EXPECT_LE((pinv * phi * pinv - pinv).norm(), 1e-12);
}

TEST(Objective, TrivialZeros) {
    const ForwardOperator op(oracle::random_normal(3, 5, 9));
    const RgbImage x(Matrix::Zero(3, 6), 2, 3);
    EXPECT_EQ(objective(SpectralCube::zeros(5, 2, 3), op, x, 0.3, TransformKind::spectral_dct), 0.0);
}

TEST(Objective, ConsistentWithoutRegularizer) {
    const Problem p = random_problem(5, 2, 3, 10);
    EXPECT_LE(objective(p.truth, p.op, p.x, 0.0, TransformKind::identity), 1e-28);
}

TEST(Objective, MatchesIndependentEvaluation) {
    const Problem p = random_problem(9, 4, 5, 11, 0.1);
    const SpectralCube y(oracle::random_uniform(9, 20, 12), 4, 5);
    const double lambda = 0.37;
    const Matrix c = dct_matrix(9);
    const Matrix resid = oracle::naive_matmul(p.op.phi(), y.data()) - p.x.data();
    const double expected = 0.5 * resid.squaredNorm() + lambda * oracle::nuclear_bdc(c * y.data());
    EXPECT_NEAR(objective(y, p.op, p.x, lambda, TransformKind::spectral_dct), expected, 1e-12 * expected);
    EXPECT_NEAR(data_fidelity(y, p.op, p.x), 0.5 * resid.squaredNorm(), 1e-12 * expected);
}

TEST(ResolveStepSizes, AutoBroadcastAndList) {
    const ForwardOperator op(oracle::random_normal(3, 6, 13));
    SolverConfig c;
    c.stages = 3;
    const auto auto_eta = resolve_step_sizes(c, op);
    ASSERT_EQ(auto_eta.size(), 3u);
    EXPECT_NEAR(auto_eta[0], 1.0 / spectral_norm_sq(op), 1e-15);
    c.eta = {0.2};
    EXPECT_EQ(resolve_step_sizes(c, op), (std::vector<double>{0.2, 0.2, 0.2}));
    c.eta = {0.1, 0.2, 0.3};
    EXPECT_EQ(resolve_step_sizes(c, op), c.eta);
    c.eta = {0.1, 0.2};
    EXPECT_THROW(resolve_step_sizes(c, op), PreconditionError);
    c.eta = {-0.1};
    EXPECT_THROW(resolve_step_sizes(c, op), PreconditionError);
    c.eta.clear();
    EXPECT_THROW(resolve_step_sizes(c, ForwardOperator(Matrix::Zero(3, 6))), NumericError);
}

TEST(SolverConfig, Validation) {
    SolverConfig c;
    c.stages = 0;
    EXPECT_THROW(c.validate(), PreconditionError);
    c.stages = 1;
    c.lambda = -1.0;
    EXPECT_THROW(c.validate(), PreconditionError);
    c.lambda = 0.1;
    c.memory_decay = 1.0;
    EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(UnfoldSolve, ZeroDataStaysZero) {
    const ForwardOperator op(oracle::random_uniform(3, 8, 14));
    SolverConfig c = exact_config(5, 0.1);
    c.init = InitMode::zeros;
    const SolveResult res = unfold_solve(RgbImage(Matrix::Zero(3, 16), 4, 4), op, c);
    EXPECT_TRUE(res.estimate.data().isZero(0.0));
}

TEST(UnfoldSolve, FixedPointWithoutRegularizer) {
    // With B = 3 and an invertible operator the pseudoinverse start is already consistent.
    const Problem p = random_problem(3, 4, 4, 15);
    SolverConfig c = exact_config(1, 0.0);
    c.init = InitMode::pseudoinverse;
    const SolveResult res = unfold_solve(p.x, p.op, c);
    EXPECT_LE((res.estimate.data() - p.truth.data()).norm(), 1e-10 * p.truth.data().norm());
}

TEST(UnfoldSolve, ExactnessRegimeDescends) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Problem p = random_problem(8, 8, 16, 300 + seed, 0.02);
        SolverConfig c = exact_config(30, 0.05);
        c.init = seed % 2 ? InitMode::pseudoinverse : InitMode::adjoint;
        const SolveResult res = unfold_solve(p.x, p.op, c);
        double prev = res.report.initial_objective;
        ASSERT_EQ(res.report.stages.size(), 30u);
        for (const auto& s : res.report.stages) {
            EXPECT_LE(s.objective, prev + 1e-9) << "seed " << seed << " stage " << s.stage;
            prev = s.objective;
        }
    }
}

TEST(UnfoldSolve, EachStageIsOneIstaStep) {
    const Problem p = random_problem(8, 4, 8, 16, 0.05);
    SolverConfig c = exact_config(4, 0.2);
    c.init = InitMode::adjoint;
    const SolveResult res = unfold_solve(p.x, p.op, c);
    const double eta = 1.0 / spectral_norm_sq(p.op);
    const Matrix dct = dct_matrix(8);
    Matrix y = p.op.phi().transpose() * p.x.data();
    for (int k = 0; k < 4; ++k) {
        const Matrix r = y - eta * p.op.phi().transpose() * (p.op.phi() * y - p.x.data());
        y = dct.transpose() * oracle::svt_bdc(dct * r, 0.2 * eta);
    }
    EXPECT_LE((res.estimate.data() - y).norm(), 1e-10 * y.norm());
    EXPECT_DOUBLE_EQ(res.report.stages[0].theta, 0.2 * eta);
}

TEST(UnfoldSolve, SceneFidelityMonotoneAndResidualSmall) {
    const Problem p = scene_problem();
    SolverConfig c = exact_config(30, 1e-2);
    c.init = InitMode::zeros;
    const SolveResult res = unfold_solve(p.x, p.op, c);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& s : res.report.stages) {
        EXPECT_LE(s.fidelity, prev);
        prev = s.fidelity;
    }
    const double rel = (p.op.phi() * res.estimate.data() - p.x.data()).norm() / p.x.data().norm();
    EXPECT_LE(rel, 1e-2);
}

TEST(UnfoldSolve, SubspaceRunTracksExactRun) {
    const Problem p = scene_problem();
    const SolverConfig exact = exact_config(30, 1e-2);
    const SolveResult ref = unfold_solve(p.x, p.op, exact);

    SolverConfig sub;
    sub.stages = 30;
    sub.lambda = 1e-2;
    sub.lrsp.rank = 8;
    sub.lrsp.kappa = 64;
    sub.lrsp.theta = sub.lambda / spectral_norm_sq(p.op);
    const SolveResult got = unfold_solve(p.x, p.op, sub);

    const double obj_ref = ref.report.stages.back().objective;
    const double obj_sub = got.report.stages.back().objective;
    EXPECT_LE(std::abs(obj_sub - obj_ref), 0.05 * obj_ref);
    EXPECT_LE(std::abs(psnr(got.estimate, p.truth) - psnr(ref.estimate, p.truth)), 1.0);
}

TEST(UnfoldSolve, DivergenceReported) {
    const Problem p = random_problem(8, 8, 16, 17);
    SolverConfig c = exact_config(20, 0.01);
    c.init = InitMode::zeros;
    c.eta = {2.1 / spectral_norm_sq(p.op)};
    try {
        unfold_solve(p.x, p.op, c);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.stage(), 1);
        EXPECT_LE(e.stage(), 20);
        EXPECT_EQ(e.objectives().size(), static_cast<std::size_t>(e.stage() + 1));
        EXPECT_GT(e.objectives().back(), 10.0 * e.objectives().front());
    }
}

TEST(UnfoldSolve, ReportCompleteness) {
    const Problem p = random_problem(8, 6, 6, 18, 0.01);
    SolverConfig c;
    c.stages = 4;
    c.lrsp.rank = 3;
    c.lrsp.kappa = 10;
    c.lrsp.inner_steps = 2;
    const SolveResult res = unfold_solve(p.x, p.op, c);
    ASSERT_EQ(res.report.stages.size(), 4u);
    for (const auto& s : res.report.stages) EXPECT_EQ(s.lrsp.steps.size(), 2u);

    std::ostringstream csv, diag;
    res.report.write_csv(csv);
    res.report.write_diagnostics(diag);
    const std::string csv_text = csv.str();
    const std::string diag_text = diag.str();
    EXPECT_EQ(csv_text.rfind("stage,objective,fidelity,elapsed_ns\n", 0), 0u);
    EXPECT_EQ(std::count(csv_text.begin(), csv_text.end(), '\n'), 5);
    EXPECT_EQ(std::count(diag_text.begin(), diag_text.end(), '\n'), 9);
}

TEST(UnfoldSolve, InvalidSubspaceConfigRejected) {
    const Problem p = random_problem(8, 4, 4, 19);
    SolverConfig c;
    c.lrsp.rank = 9;
    EXPECT_THROW(unfold_solve(p.x, p.op, c), PreconditionError);
}

}  // namespace
