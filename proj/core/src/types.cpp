#include "hsrecon/types.hpp"

#include <string>
#include <utility>

#include "hsrecon/errors.hpp"

namespace hsrecon {

namespace {

void check_layout(const Matrix& data, Index height, Index width, const char* what) {
    if (height < 1 || width < 1) {
        throw DimensionError(std::string(what) + ": height and width must be at least 1");
    }
    if (data.cols() != height * width) {
        throw DimensionError(std::string(what) + ": " + std::to_string(data.cols()) +
                             " columns do not match " + std::to_string(height) + "x" +
                             std::to_string(width) + " pixels");
    }
    if (!data.allFinite()) {
        throw NumericError(std::string(what) + ": non-finite sample");
    }
}

}  // namespace

SpectralCube::SpectralCube(Matrix data, Index height, Index width)
    : data_(std::move(data)), height_(height), width_(width) {
    if (data_.rows() < 1) throw DimensionError("SpectralCube: at least one band required");
    check_layout(data_, height_, width_, "SpectralCube");
}

SpectralCube SpectralCube::zeros(Index bands, Index height, Index width) {
    return SpectralCube(Matrix::Zero(bands, height * width), height, width);
}

Matrix SpectralCube::band_plane(Index band) const {
    if (band < 0 || band >= bands()) throw DimensionError("band index out of range");
    Matrix plane(height_, width_);
    for (Index r = 0; r < height_; ++r) {
        for (Index c = 0; c < width_; ++c) plane(r, c) = data_(band, r * width_ + c);
    }
    return plane;
}

RgbImage::RgbImage(Matrix data, Index height, Index width)
    : data_(std::move(data)), height_(height), width_(width) {
    if (data_.rows() != 3) throw DimensionError("RgbImage: exactly 3 channels required");
    check_layout(data_, height_, width_, "RgbImage");
}

}  // namespace hsrecon
