#include "hsrecon/transform.hpp"

#include <cmath>
#include <numbers>

#include "hsrecon/errors.hpp"

namespace hsrecon {

TransformKind parse_transform_kind(std::string_view name) {
    if (name == "identity") return TransformKind::identity;
    if (name == "dct" || name == "spectral_dct") return TransformKind::spectral_dct;
    throw PreconditionError("unknown transform '" + std::string(name) + "'");
}

std::string to_string(TransformKind kind) {
    return kind == TransformKind::identity ? "identity" : "dct";
}

Matrix dct_matrix(Index bands) {
    if (bands < 1) throw PreconditionError("dct_matrix: bands must be >= 1");
    const double b = static_cast<double>(bands);
    Matrix c(bands, bands);
    for (Index k = 0; k < bands; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b);
        for (Index j = 0; j < bands; ++j) {
            c(k, j) = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(j) + 1.0) *
                                       static_cast<double>(k) / (2.0 * b));
        }
    }
    return c;
}

Matrix analyze(const SpectralCube& y, TransformKind kind) {
    if (kind == TransformKind::identity) return y.data();
    return dct_matrix(y.bands()) * y.data();
}

SpectralCube synthesize(const Matrix& u, TransformKind kind, Index height, Index width) {
    if (!u.allFinite()) throw NumericError("synthesize: non-finite input");
    if (kind == TransformKind::identity) return SpectralCube(u, height, width);
    return SpectralCube(dct_matrix(u.rows()).transpose() * u, height, width);
}

}  // namespace hsrecon
