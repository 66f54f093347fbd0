#pragma once

#include <Eigen/Core>

namespace hsrecon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Hyperspectral cube stored as a B x N matrix, one column per pixel.
/// Pixel (row, col) lives in column row * width + col.
class SpectralCube {
public:
    SpectralCube(Matrix data, Index height, Index width);

    static SpectralCube zeros(Index bands, Index height, Index width);

    const Matrix& data() const noexcept { return data_; }
    Index bands() const noexcept { return data_.rows(); }
    Index height() const noexcept { return height_; }
    Index width() const noexcept { return width_; }
    Index pixels() const noexcept { return data_.cols(); }

    /// One band reshaped to a height x width plane.
    Matrix band_plane(Index band) const;

private:
    Matrix data_;
    Index height_;
    Index width_;
};

/// Three-channel sensor response, 3 x N with the same pixel ordering as SpectralCube.
class RgbImage {
public:
    RgbImage(Matrix data, Index height, Index width);

    const Matrix& data() const noexcept { return data_; }
    Index height() const noexcept { return height_; }
    Index width() const noexcept { return width_; }
    Index pixels() const noexcept { return data_.cols(); }

private:
    Matrix data_;
    Index height_;
    Index width_;
};

}  // namespace hsrecon
