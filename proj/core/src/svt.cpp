#include "hsrecon/svt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "hsrecon/errors.hpp"

namespace hsrecon {

namespace {

using Svd = Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner>;

void require_finite(const Matrix& m, const char* what) {
    if (m.size() == 0) throw DimensionError(std::string(what) + ": empty matrix");
    if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite input");
}

}  // namespace

ShrinkageThreshold::ShrinkageThreshold(double theta) : theta_(theta) {
    if (!std::isfinite(theta) || theta < 0.0) {
        throw PreconditionError("shrinkage threshold must be finite and nonnegative");
    }
}

Vector soft_threshold(const Vector& v, ShrinkageThreshold theta) {
    const double t = theta.value();
    return v.unaryExpr([t](double x) {
        const double mag = std::max(std::abs(x) - t, 0.0);
        return x >= 0.0 ? mag : -mag;
    });
}

Vector singular_values(const Matrix& m) {
    require_finite(m, "singular_values");
    Svd svd(m);
    if (svd.info() != Eigen::Success) throw NumericError("singular_values: SVD failed");
    return svd.singularValues();
}

Matrix svt_full(const Matrix& m, ShrinkageThreshold theta) {
    require_finite(m, "svt_full");
    Svd svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("svt_full: SVD failed");
    const Vector shrunk = soft_threshold(svd.singularValues(), theta);
    Index keep = 0;
    while (keep < shrunk.size() && shrunk[keep] > 0.0) ++keep;
    if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
    return svd.matrixU().leftCols(keep) * shrunk.head(keep).asDiagonal() *
           svd.matrixV().leftCols(keep).transpose();
}

double nuclear_norm(const Matrix& m) { return singular_values(m).sum(); }

Index numerical_rank(const Matrix& m) {
    const Vector sv = singular_values(m);
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                       std::numeric_limits<double>::epsilon() * sv[0];
    return (sv.array() > tol).count();
}

}  // namespace hsrecon
