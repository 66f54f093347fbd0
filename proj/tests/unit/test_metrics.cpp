#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hsrecon/data_io.hpp"
#include "hsrecon/errors.hpp"
#include "hsrecon/metrics.hpp"
#include "oracles.hpp"

namespace {

using namespace hsrecon;

SpectralCube random_cube(Index b, Index h, Index w, std::uint64_t seed) {
    return SpectralCube(oracle::random_uniform(b, h * w, seed), h, w);
}

TEST(Psnr, IdenticalIsInfinite) {
    const SpectralCube a = random_cube(4, 5, 5, 1);
    EXPECT_EQ(psnr(a, a), kInfinitePsnr);
    EXPECT_TRUE(std::isinf(psnr(a.data(), a.data())));
}

TEST(Psnr, ArithmeticCase) {
    const Matrix a = Matrix::Zero(4, 25);
    const Matrix b = Matrix::Constant(4, 25, 0.1);  // MSE 0.01
    EXPECT_DOUBLE_EQ(psnr(a, b), 20.0);
    EXPECT_NEAR(psnr(a, b, 10.0), 40.0, 1e-12);
}

TEST(Psnr, MatchesTwoPassOracle) {
    const Matrix a = oracle::random_uniform(6, 40, 2);
    const Matrix b = oracle::random_uniform(6, 40, 3);
    double sum = 0.0;
    for (Index i = 0; i < a.size(); ++i) sum += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
    const double m = sum / static_cast<double>(a.size());
    EXPECT_NEAR(mse(a, b), m, 1e-15);
    EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / m), 1e-9);
}

TEST(Psnr, DecreasesWithNoise) {
    const Matrix a = oracle::random_uniform(5, 100, 4);
    const Matrix noise = oracle::random_normal(5, 100, 5);
    double prev = kInfinitePsnr;
    for (double amp : {0.01, 0.05, 0.2}) {
        const double v = psnr(a, a + amp * noise);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(Psnr, Errors) {
    EXPECT_THROW(psnr(Matrix::Zero(2, 3), Matrix::Zero(3, 2)), DimensionError);
    EXPECT_THROW(psnr(Matrix::Zero(2, 3), Matrix::Ones(2, 3), 0.0), PreconditionError);
}

TEST(Ssim, IdenticalIsOne) {
    const Matrix a = oracle::random_uniform(16, 18, 6);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, ConstantEqualPlanes) {
    const Matrix a = Matrix::Constant(12, 12, 0.3);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

Matrix binary_plane() {
    Matrix a(16, 16);
    for (Index i = 0; i < 16; ++i)
        for (Index j = 0; j < 16; ++j) a(i, j) = static_cast<double>((i / 3 + j / 4) % 2);
    return a;
}

TEST(Ssim, ComplementOfBinaryPlaneMatchesReference) {
    const Matrix a = binary_plane();
    const Matrix b = Matrix::Ones(16, 16) - a;
    const double v = ssim(a, b);
    EXPECT_LT(v, 1.0);
    EXPECT_NEAR(v, -0.9582871230552801, 1e-9);
    EXPECT_NEAR(v, oracle::naive_ssim(a, b, 1.0), 1e-12);
}

TEST(Ssim, SmoothPairMatchesReference) {
    Matrix a(20, 23), b(20, 23);
    for (Index i = 0; i < 20; ++i)
        for (Index j = 0; j < 23; ++j) {
            const double di = static_cast<double>(i), dj = static_cast<double>(j);
            a(i, j) = 0.5 + 0.4 * std::sin(di / 3.0) * std::cos(dj / 5.0);
            b(i, j) = std::clamp(a(i, j) + 0.1 * std::cos(di * dj / 7.0), 0.0, 1.0);
        }
    EXPECT_NEAR(ssim(a, b), 0.7895246893077135, 1e-9);
}

TEST(Ssim, RandomMatchesWindowOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Matrix a = oracle::random_uniform(13, 17, 10 + seed);
        const Matrix b = (a + 0.2 * oracle::random_normal(13, 17, 20 + seed)).cwiseMax(0.0).cwiseMin(1.0);
        EXPECT_NEAR(ssim(a, b), oracle::naive_ssim(a, b, 1.0), 1e-12);
    }
}

TEST(Ssim, CubeAveragesBands) {
    const SpectralCube a = random_cube(3, 12, 14, 30);
    const SpectralCube b = random_cube(3, 12, 14, 31);
    double expected = 0.0;
    for (Index k = 0; k < 3; ++k) expected += ssim(a.band_plane(k), b.band_plane(k));
    EXPECT_NEAR(ssim(a, b), expected / 3.0, 1e-15);
}

TEST(Ssim, WindowTooLarge) {
    EXPECT_THROW(ssim(Matrix::Zero(10, 20), Matrix::Zero(10, 20)), DimensionError);
    EXPECT_THROW(ssim(Matrix::Zero(12, 20), Matrix::Zero(20, 12)), DimensionError);
}

TEST(Sam, ScaledCubesAreZero) {
    const SpectralCube b = random_cube(8, 5, 6, 40);
    EXPECT_NEAR(sam(SpectralCube(3.7 * b.data(), 5, 6), b).mean_deg, 0.0, 1e-6);
}

TEST(Sam, PerPixelScalingInvariance) {
    const SpectralCube a = random_cube(8, 5, 6, 41);
    const SpectralCube b = random_cube(8, 5, 6, 42);
    const Vector scale = oracle::random_uniform(30, 1, 43, 0.1, 5.0);
    const SpectralCube scaled(b.data() * scale.asDiagonal(), 5, 6);
    EXPECT_NEAR(sam(a, scaled).mean_deg, sam(a, b).mean_deg, 1e-9);
}

TEST(Sam, OrthogonalIsNinety) {
    Matrix a = Matrix::Zero(4, 6), b = Matrix::Zero(4, 6);
    a.row(0).setOnes();
    b.row(2).setConstant(2.0);
    EXPECT_NEAR(sam(SpectralCube(a, 2, 3), SpectralCube(b, 2, 3)).mean_deg, 90.0, 1e-12);
}

TEST(Sam, MatchesScalarOracle) {
    const SpectralCube a = random_cube(10, 4, 7, 44);
    const SpectralCube b = random_cube(10, 4, 7, 45);
    double total = 0.0;
    for (Index i = 0; i < 28; ++i) {
        double dot = 0, na = 0, nb = 0;
        for (Index k = 0; k < 10; ++k) {
            dot += a.data()(k, i) * b.data()(k, i);
            na += a.data()(k, i) * a.data()(k, i);
            nb += b.data()(k, i) * b.data()(k, i);
        }
        total += std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0)) * 180.0 / M_PI;
    }
    EXPECT_NEAR(sam(a, b).mean_deg, total / 28.0, 1e-9);
}

TEST(Sam, ZeroPixelsExcludedAndAllZeroRejected) {
    Matrix a = oracle::random_uniform(5, 6, 46);
    Matrix b = a;
    a.col(2).setZero();
    b.col(4).setZero();
    const SamResult r = sam(SpectralCube(a, 2, 3), SpectralCube(b, 2, 3));
    EXPECT_EQ(r.excluded_pixels, 2);
    EXPECT_NEAR(r.mean_deg, 0.0, 1e-6);
    EXPECT_THROW(sam(SpectralCube::zeros(5, 2, 3), SpectralCube(b, 2, 3)), PreconditionError);
}

TEST(Ciede2000, PublishedPairs) {
    for (const auto& p : oracle::ciede2000_table()) {
        const double de = ciede2000(Lab{p.l1, p.a1, p.b1}, Lab{p.l2, p.a2, p.b2});
        EXPECT_NEAR(de, p.de, 1e-4) << p.l1 << "," << p.a1 << "," << p.b1;
    }
}

TEST(Ciede2000, SymmetricOnRandomPairs) {
    const Matrix v = oracle::random_uniform(6, 200, 47);
    for (Index i = 0; i < 200; ++i) {
        const Lab x{100 * v(0, i), 200 * v(1, i) - 100, 200 * v(2, i) - 100};
        const Lab y{100 * v(3, i), 200 * v(4, i) - 100, 200 * v(5, i) - 100};
        EXPECT_NEAR(ciede2000(x, y), ciede2000(y, x), 1e-10);
    }
}

TEST(LinearSrgbToLab, ReferenceConversions) {
    struct Case { double r, g, b, l, a, bb; };
    const Case cases[] = {
        {1.0, 1.0, 1.0, 100.00000386666655, -1.6666666158293708e-05, 6.666666463317483e-06},
        {0.2, 0.5, 0.8, 73.40585149759292, -8.926104134788837, -28.087930805487883},
        {0.9, 0.1, 0.05, 58.65171583004529, 57.8475455567945, 46.06239545021613},
        // Linear branch; exact CIE constants (216/24389, 24389/27) rather than the rounded 7.787 slope.
        {0.001, 0.002, 0.0005, 1.5166930150814828, -1.5487450095522937, 1.5667278165226395},
    };
    for (const auto& c : cases) {
        const Lab lab = linear_srgb_to_lab(c.r, c.g, c.b);
        EXPECT_NEAR(lab.l, c.l, 1e-9);
        EXPECT_NEAR(lab.a, c.a, 1e-9);
        EXPECT_NEAR(lab.b, c.bb, 1e-9);
    }
}

TEST(DeltaE00, IdenticalSymmetricAndClamped) {
    const Matrix a = oracle::random_uniform(3, 20, 48);
    const Matrix b = oracle::random_uniform(3, 20, 49);
    EXPECT_EQ(delta_e00(RgbImage(a, 4, 5), RgbImage(a, 4, 5)).mean, 0.0);
    EXPECT_NEAR(delta_e00(RgbImage(a, 4, 5), RgbImage(b, 4, 5)).mean,
                delta_e00(RgbImage(b, 4, 5), RgbImage(a, 4, 5)).mean, 1e-12);
    Matrix over = a;
    over(0, 0) = 1.5;
    over(2, 3) = -0.2;
    Matrix clipped = over.cwiseMax(0.0).cwiseMin(1.0);
    const DeltaEResult r = delta_e00(RgbImage(over, 4, 5), RgbImage(clipped, 4, 5));
    EXPECT_EQ(r.clamped_values, 2);
    EXPECT_EQ(r.mean, 0.0);
    EXPECT_GT(delta_e00(RgbImage(a, 4, 5), RgbImage(b, 4, 5)).mean, 0.0);
}

TEST(MseMap, IdenticalIsZero) {
    const SpectralCube a = random_cube(5, 3, 4, 50);
    EXPECT_TRUE(mse_map(a, a).isZero(0.0));
}

TEST(MseMap, SingleBandIsSquaredError) {
    const SpectralCube a = random_cube(1, 3, 4, 51);
    const SpectralCube b = random_cube(1, 3, 4, 52);
    const Matrix m = mse_map(a, b);
    for (Index r = 0; r < 3; ++r)
        for (Index c = 0; c < 4; ++c) {
            const double d = a.data()(0, r * 4 + c) - b.data()(0, r * 4 + c);
            EXPECT_EQ(m(r, c), d * d);
        }
}

TEST(MseMap, MatchesLoopOracleAndGlobalMean) {
    const SpectralCube a = random_cube(7, 6, 9, 53);
    const SpectralCube b = random_cube(7, 6, 9, 54);
    const Matrix m = mse_map(a, b);
    for (Index r = 0; r < 6; ++r)
        for (Index c = 0; c < 9; ++c) {
            double acc = 0.0;
            for (Index k = 0; k < 7; ++k) {
                const double d = a.data()(k, r * 9 + c) - b.data()(k, r * 9 + c);
                acc += d * d;
            }
            EXPECT_NEAR(m(r, c), acc / 7.0, 1e-15);
        }
    EXPECT_NEAR(m.mean(), mse(a.data(), b.data()), 1e-12);
}

TEST(MseMap, ShapeMismatch) {
    EXPECT_THROW(mse_map(random_cube(3, 2, 6, 1), random_cube(3, 3, 4, 2)), DimensionError);
}

TEST(Evaluate, ReportAndCsv) {
    SceneSpec spec;
    spec.bands = 8;
    spec.height = 12;
    spec.width = 12;
    spec.rank = 2;
    spec.seed = 3;
    const SpectralCube ref = synth_scene(spec);
    const SpectralCube test(
        (ref.data() + 0.01 * oracle::random_normal(8, 144, 55)).cwiseMax(0.0).cwiseMin(1.0), 12, 12);
    const ForwardOperator op = make_phi(synth_css(8), flat_illuminant(8));
    const MetricReport with_op = evaluate(ref, test, op);
    const MetricReport without = evaluate(ref, test);
    EXPECT_DOUBLE_EQ(with_op.psnr_db, psnr(ref, test));
    EXPECT_DOUBLE_EQ(with_op.ssim, ssim(ref, test));
    EXPECT_DOUBLE_EQ(with_op.sam_deg, sam(ref, test).mean_deg);
    ASSERT_TRUE(with_op.delta_e00.has_value());
    EXPECT_GT(*with_op.delta_e00, 0.0);
    EXPECT_FALSE(without.delta_e00.has_value());

    std::ostringstream out;
    MetricReport::write_csv_header(out);
    without.write_csv_row(out);
    const std::string s = out.str();
    EXPECT_EQ(s.rfind("psnr_db,ssim,sam_deg,delta_e00\n", 0), 0u);
    EXPECT_EQ(s.back(), '\n');
    EXPECT_EQ(s[s.size() - 2], ',');
}

}  // namespace
