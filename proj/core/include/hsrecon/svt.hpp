#pragma once

#include "hsrecon/types.hpp"

namespace hsrecon {

/// Nonnegative finite threshold in singular-value units.
class ShrinkageThreshold {
public:
    explicit ShrinkageThreshold(double theta);
    double value() const noexcept { return theta_; }

private:
    double theta_;
};

/// sign(v) * max(|v| - theta, 0), entrywise.
Vector soft_threshold(const Vector& v, ShrinkageThreshold theta);

/// Thin SVD singular values, descending.
Vector singular_values(const Matrix& m);

/// Exact proximal map of theta * ||.||_* via a full (thin) SVD.
Matrix svt_full(const Matrix& m, ShrinkageThreshold theta);

double nuclear_norm(const Matrix& m);

/// Count of singular values above max(d, n) * eps * sigma_max.
Index numerical_rank(const Matrix& m);

}  // namespace hsrecon
