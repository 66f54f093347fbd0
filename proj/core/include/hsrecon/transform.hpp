#pragma once

#include <string>
#include <string_view>

#include "hsrecon/types.hpp"

namespace hsrecon {

/// Fixed orthonormal analysis/synthesis pair acting along the spectral axis.
enum class TransformKind { identity, spectral_dct };

/// Accepts "identity" and "dct" (or "spectral_dct").
TransformKind parse_transform_kind(std::string_view name);
std::string to_string(TransformKind kind);

/// Orthonormal DCT-II matrix; row k is the k-th cosine basis vector.
Matrix dct_matrix(Index bands);

Matrix analyze(const SpectralCube& y, TransformKind kind);
SpectralCube synthesize(const Matrix& u, TransformKind kind, Index height, Index width);

}  // namespace hsrecon
