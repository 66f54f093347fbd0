#include "hsrecon/lrsp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include <Eigen/QR>

#include "hsrecon/errors.hpp"
#include "random.hpp"

namespace hsrecon {

namespace {

constexpr std::uint64_t kScoreStream = 1;
constexpr std::uint64_t kProbeStream = 2;
constexpr std::uint64_t kCompletionStream = 3;

using Clock = std::chrono::steady_clock;

std::int64_t nanoseconds_since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

std::uint64_t step_seed(std::uint64_t seed, Index t) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Indices sorted by value descending, ties to the lower index.
std::vector<Index> descending_order(const Vector& values, Index count) {
    std::vector<Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Index{0});
    const auto cmp = [&values](Index a, Index b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    };
    const auto mid = order.begin() + static_cast<std::ptrdiff_t>(count);
    std::partial_sort(order.begin(), mid, order.end(), cmp);
    order.resize(static_cast<std::size_t>(count));
    return order;
}

Vector raw_importance(const Matrix& u) {
    const Vector norms = u.colwise().norm().transpose();
    const double n = static_cast<double>(norms.size());
    const double mean = norms.mean();
    const double var = (norms.array() - mean).square().sum() / n;
    const double scale = std::sqrt(var) + 1e-12;
    // Keep strictly inside (0, 1) even when a standardized norm saturates the logistic.
    constexpr double lo = 1e-15;
    constexpr double hi = 1.0 - 1e-15;
    return norms.unaryExpr([&](double x) { return std::clamp(logistic((x - mean) / scale), lo, hi); });
}

void complete_basis(Matrix& q, Index from, std::uint64_t seed) {
    auto engine = detail::seeded_engine(seed, kCompletionStream);
    const Index d = q.rows();
    for (Index j = from; j < q.cols();) {
        Vector v = detail::gaussian_matrix(d, 1, engine);
        // Two Gram-Schmidt passes against everything accepted so far.
        for (int pass = 0; pass < 2; ++pass) {
            if (j > 0) v -= q.leftCols(j) * (q.leftCols(j).transpose() * v);
        }
        const double norm = v.norm();
        if (norm < 1e-8) continue;
        q.col(j) = v / norm;
        ++j;
    }
}

}  // namespace

void LrspConfig::validate(Index d, Index n) const {
    auto fail = [](const std::string& msg) { throw PreconditionError("LrspConfig: " + msg); };
    if (d < 1 || n < 1) fail("input must be non-empty");
    if (rank < 1) fail("rank must be >= 1");
    if (rank > d) fail("rank " + std::to_string(rank) + " exceeds d = " + std::to_string(d));
    if (kappa < rank) fail("kappa must be >= rank");
    if (kappa > n) fail("kappa " + std::to_string(kappa) + " exceeds n = " + std::to_string(n));
    if (probes < 1) fail("probes must be >= 1");
    if (inner_steps < 1) fail("inner_steps must be >= 1");
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) fail("tau0 must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
    if (!(tau_min > 0.0) || !std::isfinite(tau_min)) fail("tau_min must be > 0");
    if (!(beta1 > 0.0) || !std::isfinite(beta1)) fail("beta1 must be > 0");
    if (!(c_beta >= 0.0) || !std::isfinite(c_beta)) fail("c_beta must be >= 0");
    if (!(nu > 0.0) || !std::isfinite(nu)) fail("nu must be > 0");
    if (!(theta >= 0.0) || !std::isfinite(theta)) fail("theta must be >= 0");
    if (!(eps > 0.0)) fail("eps must be > 0");
}

LrspConfig LrspConfig::exactness(Index d, Index n, double theta) {
    LrspConfig c;
    c.rank = d;
    c.kappa = n;
    c.inner_steps = 1;
    c.beta1 = 40.0;  // 1 / (1 + exp(-40)) rounds to exactly 1.0
    c.c_beta = 0.0;
    c.theta = theta;
    return c;
}

LrspState LrspState::initial(const LrspConfig& config, double mu) {
    if (!(mu >= 0.0 && mu < 1.0)) throw PreconditionError("LrspState: mu must lie in [0, 1)");
    LrspState s;
    s.beta = config.beta1;
    s.mu = mu;
    return s;
}

double logistic(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Vector column_importance(const Matrix& u, const LrspState& state) {
    if (!u.allFinite()) throw NumericError("column_importance: non-finite input");
    Vector g = raw_importance(u);
    if (state.memory_g.size() == 0) return g;
    if (state.memory_g.size() != g.size()) {
        throw DimensionError("column_importance: memory length " +
                             std::to_string(state.memory_g.size()) + " != n = " +
                             std::to_string(g.size()));
    }
    return (1.0 - state.mu) * g + state.mu * state.memory_g;
}

Vector score_columns(const Matrix& u, std::uint64_t seed) {
    const Index d = u.rows();
    const Index m = std::min<Index>(d, 16);
    auto engine = detail::seeded_engine(seed, kScoreStream);
    const Matrix projection = detail::gaussian_matrix(m, d, engine);
    const Vector query = detail::gaussian_matrix(m, 1, engine);
    // <P u_i, q> = <u_i, P^T q>
    const Vector direction = projection.transpose() * query;
    return u.transpose() * direction;
}

Vector soft_topk(const Vector& scores, Index kappa, double tau) {
    const Index n = scores.size();
    if (kappa < 1 || kappa >= n) {
        throw PreconditionError("soft_topk: need 1 <= kappa < n (kappa = " + std::to_string(kappa) +
                                ", n = " + std::to_string(n) + ")");
    }
    if (!(tau > 0.0)) throw PreconditionError("soft_topk: tau must be > 0");
    const Index pivot_index = descending_order(scores, kappa + 1).back();
    const double pivot = scores[pivot_index];
    Vector w = scores.unaryExpr([&](double s) { return softplus((s - pivot) / tau); });
    const double total = w.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw NumericError("soft_topk: weights do not normalize");
    }
    return w / total;
}

Selector build_selector(const Vector& g, const Vector& w, Index kappa) {
    const Index n = w.size();
    if (g.size() != n) throw DimensionError("build_selector: g and w lengths differ");
    if (kappa < 1 || kappa > n) throw PreconditionError("build_selector: need 1 <= kappa <= n");
    if ((w.array() == 0.0).all()) {
        throw DegenerateSelectionError("build_selector: all selection weights are zero");
    }
    Selector omega;
    omega.indices = descending_order(w, kappa);
    omega.weights.resize(kappa);
    for (Index j = 0; j < kappa; ++j) {
        const Index i = omega.indices[static_cast<std::size_t>(j)];
        omega.weights[j] = g[i] * w[i];
    }
    return omega;
}

Matrix selector_sketch(const Matrix& u, const Selector& omega) {
    const Index k = static_cast<Index>(omega.indices.size());
    Matrix sketch(u.rows(), k);
    for (Index j = 0; j < k; ++j) {
        sketch.col(j) = omega.weights[j] * u.col(omega.indices[static_cast<std::size_t>(j)]);
    }
    return sketch;
}

Subspace orthonormal_subspace(const Matrix& u, const Selector& omega, Index r, std::uint64_t seed) {
    const Index d = u.rows();
    const Index kappa = static_cast<Index>(omega.indices.size());
    if (r < 1 || r > d || r > kappa) {
        throw PreconditionError("orthonormal_subspace: need 1 <= r <= min(d, kappa)");
    }
    const Matrix sketch = selector_sketch(u, omega);

    Subspace out;
    out.basis.resize(d, r);
    Index rank = 0;
    if (sketch.cwiseAbs().maxCoeff() > 0.0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(sketch.rows(), sketch.cols());
        qr.setThreshold(static_cast<double>(std::max(d, kappa)) *
                        std::numeric_limits<double>::epsilon());
        qr.compute(sketch);
        rank = std::min(qr.rank(), r);
        if (rank > 0) {
            const Matrix q_full = qr.householderQ();
            out.basis.leftCols(rank) = q_full.leftCols(rank);
        }
    }
    out.sketch_rank = rank;
    out.completed_columns = r - rank;
    if (rank < r) complete_basis(out.basis, rank, seed);
    return out;
}

double residual_ratio(const Matrix& u, const Matrix& q, const Vector& g, Index probes,
                      std::uint64_t seed, double eps) {
    if (probes < 1) throw PreconditionError("residual_ratio: probes must be >= 1");
    if (!(eps > 0.0)) throw PreconditionError("residual_ratio: eps must be > 0");
    if (g.size() != u.cols() || q.rows() != u.rows()) {
        throw DimensionError("residual_ratio: operand shapes do not conform");
    }
    auto engine = detail::seeded_engine(seed, kProbeStream);
    const Matrix xi = detail::gaussian_matrix(u.cols(), probes, engine);
    const Matrix ug = u * (g.asDiagonal() * xi);
    const Matrix residual = ug - q * (q.transpose() * ug);
    // Rounding can push a full residual a hair past the probe norm.
    const double ratio = residual.norm() / (ug.norm() + eps);
    return std::min(ratio, std::nextafter(1.0, 0.0));
}

Refinement refine_and_increment(double rho_tilde, const Vector& /*pooled*/, const LrspConfig& config) {
    if (!(rho_tilde >= 0.0 && rho_tilde < 1.0)) {
        throw PreconditionError("refine_and_increment: rho_tilde must lie in [0, 1)");
    }
    return Refinement{rho_tilde, config.c_beta * (1.0 - rho_tilde)};
}

Vector sparse_pool(const Matrix& u, const Selector& omega) {
    Vector pooled = Vector::Zero(u.rows());
    for (std::size_t j = 0; j < omega.indices.size(); ++j) {
        pooled += omega.weights[static_cast<Index>(j)] * u.col(omega.indices[j]);
    }
    return pooled;
}

double temperature(Index t, const LrspConfig& config) {
    if (t < 1) throw PreconditionError("temperature: t must be >= 1");
    return std::max(config.tau_min, config.tau0 * std::pow(config.gamma, static_cast<double>(t - 1)));
}

Matrix subspace_proximal(const Matrix& u, const Matrix& q, ShrinkageThreshold theta, double beta) {
    if (q.rows() != u.rows()) throw DimensionError("subspace_proximal: Q rows != d");
    const double alpha = logistic(beta);
    const Matrix compact = q.transpose() * u;  // r x n
    const Matrix gated = (1.0 - alpha) * compact + alpha * svt_full(compact, theta);
    return q * gated;
}

Vector fusion_weights(std::span<const double> rho_hats, double nu) {
    if (rho_hats.empty()) throw PreconditionError("fusion_weights: no proposals");
    if (!(nu > 0.0)) throw PreconditionError("fusion_weights: nu must be > 0");
    const double lowest = *std::min_element(rho_hats.begin(), rho_hats.end());
    Vector w(static_cast<Index>(rho_hats.size()));
    for (std::size_t t = 0; t < rho_hats.size(); ++t) {
        w[static_cast<Index>(t)] = std::exp(-nu * (rho_hats[t] - lowest));
    }
    return w / w.sum();
}

Matrix fuse_proposals(std::span<const Matrix> proposals, std::span<const double> rho_hats, double nu) {
    if (proposals.empty()) throw PreconditionError("fuse_proposals: empty proposal list");
    if (proposals.size() != rho_hats.size()) {
        throw DimensionError("fuse_proposals: proposal and residual counts differ");
    }
    const Vector w = fusion_weights(rho_hats, nu);
    Matrix fused = w[0] * proposals[0];
    for (std::size_t t = 1; t < proposals.size(); ++t) {
        if (proposals[t].rows() != fused.rows() || proposals[t].cols() != fused.cols()) {
            throw DimensionError("fuse_proposals: proposals do not conform");
        }
        fused += w[static_cast<Index>(t)] * proposals[t];
    }
    return fused;
}

LrspResult lrsp_apply(const Matrix& u, const LrspConfig& config, const LrspState& state) {
    const auto start = Clock::now();
    const Index d = u.rows();
    const Index n = u.cols();
    config.validate(d, n);
    if (!u.allFinite()) throw NumericError("lrsp_apply: non-finite input");

    const Vector g_raw = raw_importance(u);
    Vector g = g_raw;
    if (state.memory_g.size() != 0) {
        if (state.memory_g.size() != n) throw DimensionError("lrsp_apply: memory length != n");
        g = (1.0 - state.mu) * g_raw + state.mu * state.memory_g;
    }
    const Vector scores = score_columns(u, config.seed);
    const ShrinkageThreshold theta(config.theta);

    LrspResult result;
    std::vector<Matrix> proposals;
    std::vector<double> rho_hats;
    proposals.reserve(static_cast<std::size_t>(config.inner_steps));
    rho_hats.reserve(static_cast<std::size_t>(config.inner_steps));

    double beta = state.beta;
    for (Index t = 1; t <= config.inner_steps; ++t) {
        const auto step_start = Clock::now();
        const std::uint64_t seed_t = step_seed(config.seed, t);
        LrspStepDiagnostics step;
        step.t = t;
        step.tau = temperature(t, config);

        // With the whole row in budget every column is kept at equal soft mass.
        const Vector w = config.kappa < n ? soft_topk(scores, config.kappa, step.tau)
                                          : Vector::Constant(n, 1.0 / static_cast<double>(n));
        const Selector omega = build_selector(g, w, config.kappa);
        const Subspace sub = orthonormal_subspace(u, omega, config.rank, seed_t);
        step.rho_tilde = residual_ratio(u, sub.basis, g, config.probes, seed_t, config.eps);
        const Vector pooled = sparse_pool(u, omega);
        const Refinement ref = refine_and_increment(step.rho_tilde, pooled, config);

        step.beta = beta;
        step.alpha = logistic(beta);
        step.rho_hat = ref.rho_hat;
        step.delta_beta = ref.delta_beta;
        step.pooled_norm = pooled.norm();
        step.sketch_rank = sub.sketch_rank;
        step.completed_columns = sub.completed_columns;

        proposals.push_back(subspace_proximal(u, sub.basis, theta, beta));
        rho_hats.push_back(ref.rho_hat);
        beta += ref.delta_beta;
        step.elapsed_ns = nanoseconds_since(step_start);
        result.diagnostics.steps.push_back(step);
    }

    const Vector weights = fusion_weights(rho_hats, config.nu);
    result.output = fuse_proposals(proposals, rho_hats, config.nu);
    double effective_alpha = 0.0;
    for (std::size_t t = 0; t < result.diagnostics.steps.size(); ++t) {
        auto& step = result.diagnostics.steps[t];
        step.weight = weights[static_cast<Index>(t)];
        effective_alpha += step.weight * step.alpha;
    }
    result.diagnostics.effective_alpha = effective_alpha;

    result.state.beta = beta;
    result.state.mu = state.mu;
    result.state.memory_g = state.memory_g.size() == 0
                                ? g_raw
                                : Vector(state.mu * state.memory_g + (1.0 - state.mu) * g_raw);
    result.diagnostics.elapsed_ns = nanoseconds_since(start);
    return result;
}

void write_lrsp_diagnostics_header(std::ostream& out) {
    out << "stage,t,tau,beta,rho_hat,w,elapsed_ns\n";
}

void write_lrsp_diagnostics(std::ostream& out, Index stage, const LrspDiagnostics& diagnostics) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17);
    for (const auto& s : diagnostics.steps) {
        out << stage << ',' << s.t << ',' << s.tau << ',' << s.beta << ',' << s.rho_hat << ','
            << s.weight << ',' << s.elapsed_ns << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

}  // namespace hsrecon
