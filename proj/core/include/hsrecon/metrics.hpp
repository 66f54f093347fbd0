#pragma once

#include <iosfwd>
#include <limits>
#include <optional>

#include "hsrecon/forward_model.hpp"
#include "hsrecon/types.hpp"

namespace hsrecon {

/// Returned by psnr for identical inputs.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

double mse(const Matrix& a, const Matrix& b);

/// 10 log10(peak^2 / MSE) in dB.
double psnr(const Matrix& a, const Matrix& b, double peak = 1.0);
double psnr(const SpectralCube& a, const SpectralCube& b, double peak = 1.0);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), valid positions only,
/// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2. Planes are height x width.
double ssim(const Matrix& a, const Matrix& b, double peak = 1.0);
/// Band-averaged SSIM.
double ssim(const SpectralCube& a, const SpectralCube& b, double peak = 1.0);

struct SamResult {
    double mean_deg = 0.0;
    Index excluded_pixels = 0;  ///< pixels where either spectrum has zero norm
};

/// Mean spectral angle in degrees over pixels with nonzero spectra in both cubes.
SamResult sam(const SpectralCube& a, const SpectralCube& b);

struct Lab {
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// Linear sRGB primaries (D65) to CIELAB.
Lab linear_srgb_to_lab(double r, double g, double b);

/// CIEDE2000 color difference with kL = kC = kH = 1.
double ciede2000(const Lab& x, const Lab& y);

struct DeltaEResult {
    double mean = 0.0;
    Index clamped_values = 0;  ///< channel values pulled into [0, 1] before conversion
};

/// Mean per-pixel CIEDE2000 between two linear-sRGB images.
DeltaEResult delta_e00(const RgbImage& a, const RgbImage& b);

/// Per-pixel mean over bands of the squared error, as a height x width plane.
Matrix mse_map(const SpectralCube& a, const SpectralCube& b);

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double sam_deg = 0.0;
    std::optional<double> delta_e00;

    static void write_csv_header(std::ostream& out);
    /// psnr_db,ssim,sam_deg,delta_e00 (empty last field when no operator was given)
    void write_csv_row(std::ostream& out) const;
};

/// All metrics of `test` against `ref`. With an operator, both cubes are rendered and
/// scaled by the reference rendering's maximum before the color difference is taken.
MetricReport evaluate(const SpectralCube& ref, const SpectralCube& test,
                      const std::optional<ForwardOperator>& op = std::nullopt);

}  // namespace hsrecon
