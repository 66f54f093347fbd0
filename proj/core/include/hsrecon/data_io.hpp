#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "hsrecon/forward_model.hpp"
#include "hsrecon/types.hpp"

namespace hsrecon {

/// Synthetic low-rank scene parameters.
struct SceneSpec {
    Index bands = 31;
    Index height = 32;
    Index width = 32;
    Index rank = 4;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// clamp(A C + noise, 0, 1): A holds smooth Gaussian-bump signatures (B x rank, peak 1)
/// and C holds nonnegative, spatially smooth abundances whose per-pixel sums are <= 1.
SpectralCube synth_scene(const SceneSpec& spec);

/// Gaussian rank-`rank` d x n matrix plus white noise at the given signal-to-noise ratio
/// (dB, Frobenius energy); snr_db = +inf gives the exact low-rank matrix.
Matrix synth_low_rank(Index d, Index n, Index rank, double snr_db, std::uint64_t seed);

/// Uniform grid over 400..700 nm.
Vector wavelength_grid(Index bands);

/// Gaussian channel responses centred at 650 / 550 / 450 nm (rows R, G, B), peak 1.
Sensitivity synth_css(Index bands);

/// Equal-energy illuminant on the standard grid.
Illuminant flat_illuminant(Index bands);

/// apply_phi(make_phi(s, ell), y).
RgbImage render_rgb(const SpectralCube& y, const Sensitivity& s, const Illuminant& ell);

// Cube file: "HSC1", then b, h, w as little-endian u32, then b*h*w little-endian float32
// samples, band-major then row-major.
inline constexpr char kCubeMagic[4] = {'H', 'S', 'C', '1'};
inline constexpr std::uint64_t kCubeHeaderBytes = 16;

void write_cube(std::ostream& out, const SpectralCube& y);
void write_cube(const std::filesystem::path& path, const SpectralCube& y);
SpectralCube read_cube(std::istream& in);
SpectralCube read_cube(const std::filesystem::path& path);

/// RGB images use the cube container with b = 3.
void write_rgb(const std::filesystem::path& path, const RgbImage& x);
RgbImage read_rgb(const std::filesystem::path& path);

/// A height x width plane stored as a single-band cube.
void write_plane(const std::filesystem::path& path, const Matrix& plane);

// Spectra CSV: header `wavelength_nm,v1[,v2,v3]`, one row per band, wavelengths strictly
// increasing.
Sensitivity load_sensitivity_csv(const std::filesystem::path& path);
Illuminant load_illuminant_csv(const std::filesystem::path& path);
void save_sensitivity_csv(const std::filesystem::path& path, const Sensitivity& s);
void save_illuminant_csv(const std::filesystem::path& path, const Illuminant& ell);

// Operator CSV: 3 rows of B comma-separated values, no header.
ForwardOperator load_phi_csv(const std::filesystem::path& path);
void save_phi_csv(const std::filesystem::path& path, const ForwardOperator& op);

}  // namespace hsrecon
