#include "hsrecon/forward_model.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hsrecon/errors.hpp"

namespace hsrecon {

namespace {

void check_grid(const Vector& wavelengths, Index bands, const char* what) {
    if (wavelengths.size() != bands) {
        throw DimensionError(std::string(what) + ": wavelength grid length " +
                             std::to_string(wavelengths.size()) + " != band count " +
                             std::to_string(bands));
    }
    if (!wavelengths.allFinite()) throw PreconditionError(std::string(what) + ": non-finite wavelength");
    for (Index b = 1; b < wavelengths.size(); ++b) {
        if (!(wavelengths[b] > wavelengths[b - 1])) {
            throw PreconditionError(std::string(what) + ": wavelengths must be strictly increasing");
        }
    }
}

bool same_grid(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    for (Index i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1.0, std::abs(a[i]))) return false;
    }
    return true;
}

}  // namespace

Sensitivity::Sensitivity(Matrix matrix, Vector wavelengths)
    : matrix_(std::move(matrix)), wavelengths_(std::move(wavelengths)) {
    if (matrix_.rows() != 3) throw DimensionError("Sensitivity: exactly 3 rows required");
    if (matrix_.cols() < 1) throw DimensionError("Sensitivity: at least one band required");
    check_grid(wavelengths_, matrix_.cols(), "Sensitivity");
    if (!matrix_.allFinite() || (matrix_.array() < 0.0).any()) {
        throw PreconditionError("Sensitivity: entries must be finite and nonnegative");
    }
    for (Index c = 0; c < 3; ++c) {
        if (!(matrix_.row(c).array() > 0.0).any()) {
            throw PreconditionError("Sensitivity: channel " + std::to_string(c) +
                                    " has no positive response");
        }
    }
}

Illuminant::Illuminant(Vector spectrum, Vector wavelengths)
    : spectrum_(std::move(spectrum)), wavelengths_(std::move(wavelengths)) {
    if (spectrum_.size() < 1) throw DimensionError("Illuminant: at least one band required");
    check_grid(wavelengths_, spectrum_.size(), "Illuminant");
    if (!spectrum_.allFinite() || (spectrum_.array() < 0.0).any()) {
        throw PreconditionError("Illuminant: entries must be finite and nonnegative");
    }
}

ForwardOperator::ForwardOperator(Matrix phi) : phi_(std::move(phi)) {
    if (phi_.rows() != 3 || phi_.cols() < 1) {
        throw DimensionError("ForwardOperator: expected 3 x B matrix");
    }
    if (!phi_.allFinite()) throw NumericError("ForwardOperator: non-finite entry");
}

ForwardOperator::ForwardOperator(Matrix phi, Factors factors)
    : ForwardOperator(std::move(phi)) {
    const Matrix expected =
        factors.sensitivity.matrix() * factors.illuminant.spectrum().asDiagonal();
    if (expected.rows() != phi_.rows() || expected.cols() != phi_.cols()) {
        throw DimensionError("ForwardOperator: factors do not match operator shape");
    }
    const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());
    if ((expected - phi_).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw PreconditionError("ForwardOperator: phi != S Diag(ell)");
    }
    factors_.emplace(std::move(factors));
}

Index ForwardOperator::negative_entry_count() const noexcept {
    return (phi_.array() < 0.0).count();
}

ForwardOperator make_phi(const Sensitivity& s, const Illuminant& ell) {
    if (s.bands() != ell.bands()) {
        throw DimensionError("make_phi: sensitivity has " + std::to_string(s.bands()) +
                             " bands, illuminant has " + std::to_string(ell.bands()));
    }
    if (!same_grid(s.wavelengths(), ell.wavelengths())) {
        throw DimensionError("make_phi: wavelength grids differ");
    }
    Matrix phi = s.matrix() * ell.spectrum().asDiagonal();
    return ForwardOperator(std::move(phi), ForwardOperator::Factors{s, ell});
}

RgbImage apply_phi(const ForwardOperator& op, const SpectralCube& y) {
    if (y.bands() != op.bands()) {
        throw DimensionError("apply_phi: cube has " + std::to_string(y.bands()) +
                             " bands, operator expects " + std::to_string(op.bands()));
    }
    Matrix x = op.phi() * y.data();
    if (!x.allFinite()) throw NumericError("apply_phi: non-finite result");
    return RgbImage(std::move(x), y.height(), y.width());
}

SpectralCube apply_phi_adjoint(const ForwardOperator& op, const RgbImage& x) {
    return SpectralCube(op.phi().transpose() * x.data(), x.height(), x.width());
}

ForwardOperator estimate_phi_ls(const RgbImage& x, const SpectralCube& y, double ridge) {
    if (x.pixels() != y.pixels()) {
        throw DimensionError("estimate_phi_ls: RGB and cube pixel counts differ");
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw PreconditionError("estimate_phi_ls: ridge must be finite and nonnegative");
    }
    const Index bands = y.bands();
    Matrix gram = y.data() * y.data().transpose();
    gram.diagonal().array() += ridge;

    // Rank check on the SPD system; with ridge > 0 it is always positive definite.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double largest = eig.eigenvalues().maxCoeff();
    const double smallest = eig.eigenvalues().minCoeff();
    const double cutoff =
        static_cast<double>(bands) * std::numeric_limits<double>::epsilon() * largest;
    if (!(largest > 0.0) || smallest <= cutoff) {
        throw SingularSystemError("estimate_phi_ls: Y Y^T is singular; use a positive ridge");
    }
    const Matrix rhs = y.data() * x.data().transpose();  // B x 3
    const Eigen::LLT<Matrix> llt(gram);
    Matrix phi_t = llt.solve(rhs);
    return ForwardOperator(phi_t.transpose());
}

Illuminant estimate_illuminant(const Sensitivity& s, const ForwardOperator& phi_hat) {
    if (s.bands() != phi_hat.bands()) {
        throw DimensionError("estimate_illuminant: band counts differ");
    }
    Vector ell = Vector::Zero(s.bands());
    for (Index b = 0; b < s.bands(); ++b) {
        const double norm_sq = s.matrix().col(b).squaredNorm();
        if (norm_sq == 0.0) continue;
        const double proj = phi_hat.phi().col(b).dot(s.matrix().col(b)) / norm_sq;
        ell[b] = std::max(proj, 0.0);
    }
    return Illuminant(std::move(ell), s.wavelengths());
}

double spectral_norm_sq(const ForwardOperator& op, double tol, int max_iter) {
    if (max_iter < 1) throw PreconditionError("spectral_norm_sq: max_iter must be >= 1");
    const Matrix& phi = op.phi();
    if (phi.squaredNorm() == 0.0) return 0.0;
    Vector v = Vector::Ones(phi.cols()) / std::sqrt(static_cast<double>(phi.cols()));
    double value = (phi * v).squaredNorm();
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = phi.transpose() * (phi * v);
        const double norm = w.norm();
        if (norm == 0.0) {
            // v sits in the null space of Phi; restart from the largest column.
            Index col = 0;
            phi.colwise().squaredNorm().maxCoeff(&col);
            w = Vector::Unit(phi.cols(), col);
        } else {
            w /= norm;
        }
        const double next = (phi * w).squaredNorm();
        v = std::move(w);
        if (std::abs(next - value) <= tol * next) return next;
        value = next;
    }
    throw ConvergenceError("spectral_norm_sq: power iteration did not converge", value, v, max_iter);
}

}  // namespace hsrecon
