#pragma once

#include <optional>

#include "hsrecon/types.hpp"

namespace hsrecon {

/// Camera spectral sensitivity: 3 x B nonnegative response on a strictly increasing
/// wavelength grid (nm). Every channel must respond somewhere.
class Sensitivity {
public:
    Sensitivity(Matrix matrix, Vector wavelengths);

    const Matrix& matrix() const noexcept { return matrix_; }
    const Vector& wavelengths() const noexcept { return wavelengths_; }
    Index bands() const noexcept { return matrix_.cols(); }

private:
    Matrix matrix_;
    Vector wavelengths_;
};

/// Relative spectral power of the scene illuminant, nonnegative per band.
///
/// An all-zero spectrum is representable (it is what estimate_illuminant returns when
/// no band is recoverable); file loaders reject it.
class Illuminant {
public:
    Illuminant(Vector spectrum, Vector wavelengths);

    const Vector& spectrum() const noexcept { return spectrum_; }
    const Vector& wavelengths() const noexcept { return wavelengths_; }
    Index bands() const noexcept { return spectrum_.size(); }
    bool all_zero() const noexcept { return (spectrum_.array() == 0.0).all(); }

private:
    Vector spectrum_;
    Vector wavelengths_;
};

/// The 3 x B linear map from spectra to sensor responses.
class ForwardOperator {
public:
    struct Factors {
        Sensitivity sensitivity;
        Illuminant illuminant;
    };

    explicit ForwardOperator(Matrix phi);
    ForwardOperator(Matrix phi, Factors factors);

    const Matrix& phi() const noexcept { return phi_; }
    Index bands() const noexcept { return phi_.cols(); }
    const std::optional<Factors>& factors() const noexcept { return factors_; }

    /// Entries below zero; least-squares estimates may legitimately contain some.
    Index negative_entry_count() const noexcept;

private:
    Matrix phi_;
    std::optional<Factors> factors_;
};

ForwardOperator make_phi(const Sensitivity& s, const Illuminant& ell);

RgbImage apply_phi(const ForwardOperator& op, const SpectralCube& y);
SpectralCube apply_phi_adjoint(const ForwardOperator& op, const RgbImage& x);

/// Ridge-regularized least squares: argmin ||Phi Y - X||_F^2 + ridge ||Phi||_F^2.
/// Throws SingularSystemError when Y Y^T is rank deficient and ridge is zero.
ForwardOperator estimate_phi_ls(const RgbImage& x, const SpectralCube& y, double ridge);

/// Per-band nonnegative scale that best maps the sensitivity column onto the estimated
/// operator column. Bands with an all-zero sensitivity column get zero.
Illuminant estimate_illuminant(const Sensitivity& s, const ForwardOperator& phi_hat);

/// sigma_max(Phi)^2 by power iteration on Phi^T Phi from the normalized all-ones vector.
/// Throws ConvergenceError (carrying the last iterate) if the relative change does not
/// drop below tol within max_iter iterations.
double spectral_norm_sq(const ForwardOperator& op, double tol = 1e-12, int max_iter = 10000);

}  // namespace hsrecon
