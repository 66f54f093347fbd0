#include "hsrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "hsrecon/errors.hpp"

namespace hsrecon {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": operand shapes differ");
    }
}

Vector gaussian_kernel() {
    Vector k(kWindow);
    const double c = (kWindow - 1) / 2.0;
    for (int i = 0; i < kWindow; ++i) {
        const double x = i - c;
        k[i] = std::exp(-x * x / (2.0 * kWindowSigma * kWindowSigma));
    }
    return k / k.sum();
}

/// Separable valid-mode correlation with the normalized Gaussian window.
Matrix filter_valid(const Matrix& plane, const Vector& k) {
    const Index h = plane.rows() - kWindow + 1;
    const Index w = plane.cols() - kWindow + 1;
    Matrix rows_done(plane.rows(), w);
    for (Index c = 0; c < w; ++c) {
        rows_done.col(c) = plane.middleCols(c, kWindow) * k;
    }
    Matrix out(h, w);
    for (Index r = 0; r < h; ++r) {
        out.row(r) = k.transpose() * rows_done.middleRows(r, kWindow);
    }
    return out;
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double deg) { return deg * std::numbers::pi / 180.0; }

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

double mse(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "mse");
    if (a.size() == 0) throw DimensionError("mse: empty input");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double psnr(const Matrix& a, const Matrix& b, double peak) {
    if (!(peak > 0.0)) throw PreconditionError("psnr: peak must be > 0");
    const double m = mse(a, b);
    if (m == 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(peak * peak / m);
}

double psnr(const SpectralCube& a, const SpectralCube& b, double peak) {
    return psnr(a.data(), b.data(), peak);
}

double ssim(const Matrix& a, const Matrix& b, double peak) {
    check_same_shape(a, b, "ssim");
    if (a.rows() < kWindow || a.cols() < kWindow) {
        throw DimensionError("ssim: 11x11 window is larger than the image");
    }
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const Vector k = gaussian_kernel();
    const Matrix mu_a = filter_valid(a, k);
    const Matrix mu_b = filter_valid(b, k);
    const Matrix aa = filter_valid(a.cwiseProduct(a), k);
    const Matrix bb = filter_valid(b.cwiseProduct(b), k);
    const Matrix ab = filter_valid(a.cwiseProduct(b), k);

    double total = 0.0;
    for (Index j = 0; j < mu_a.cols(); ++j) {
        for (Index i = 0; i < mu_a.rows(); ++i) {
            const double ma = mu_a(i, j);
            const double mb = mu_b(i, j);
            const double va = aa(i, j) - ma * ma;
            const double vb = bb(i, j) - mb * mb;
            const double cov = ab(i, j) - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    return total / static_cast<double>(mu_a.size());
}

double ssim(const SpectralCube& a, const SpectralCube& b, double peak) {
    check_same_shape(a.data(), b.data(), "ssim");
    if (a.height() != b.height()) throw DimensionError("ssim: spatial shapes differ");
    double total = 0.0;
    for (Index band = 0; band < a.bands(); ++band) {
        total += ssim(a.band_plane(band), b.band_plane(band), peak);
    }
    return total / static_cast<double>(a.bands());
}

SamResult sam(const SpectralCube& a, const SpectralCube& b) {
    check_same_shape(a.data(), b.data(), "sam");
    SamResult out;
    double total = 0.0;
    Index used = 0;
    for (Index i = 0; i < a.pixels(); ++i) {
        const double na = a.data().col(i).norm();
        const double nb = b.data().col(i).norm();
        if (na == 0.0 || nb == 0.0) {
            ++out.excluded_pixels;
            continue;
        }
        // Half-angle form; acos loses about 1e-8 rad near identical spectra.
        const Vector ua = a.data().col(i) / na;
        const Vector ub = b.data().col(i) / nb;
        total += deg(2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm()));
        ++used;
    }
    if (used == 0) throw PreconditionError("sam: every pixel has a zero-norm spectrum");
    out.mean_deg = total / static_cast<double>(used);
    return out;
}

Lab linear_srgb_to_lab(double r, double g, double b) {
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / 0.95047);
    const double fy = lab_f(y / 1.00000);
    const double fz = lab_f(z / 1.08883);
    return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double ciede2000(const Lab& x, const Lab& y) {
    const double pow25_7 = std::pow(25.0, 7.0);
    const double c1 = std::hypot(x.a, x.b);
    const double c2 = std::hypot(y.a, y.b);
    const double c_bar7 = std::pow((c1 + c2) / 2.0, 7.0);
    const double g = 0.5 * (1.0 - std::sqrt(c_bar7 / (c_bar7 + pow25_7)));

    const double a1 = (1.0 + g) * x.a;
    const double a2 = (1.0 + g) * y.a;
    const double c1p = std::hypot(a1, x.b);
    const double c2p = std::hypot(a2, y.b);
    auto hue = [](double b, double a) {
        if (a == 0.0 && b == 0.0) return 0.0;
        double h = deg(std::atan2(b, a));
        return h < 0.0 ? h + 360.0 : h;
    };
    const double h1p = hue(x.b, a1);
    const double h2p = hue(y.b, a2);

    const double dl = y.l - x.l;
    const double dc = c2p - c1p;
    double dh = 0.0;
    if (c1p * c2p != 0.0) {
        dh = h2p - h1p;
        if (dh > 180.0) dh -= 360.0;
        else if (dh < -180.0) dh += 360.0;
    }
    const double big_dh = 2.0 * std::sqrt(c1p * c2p) * std::sin(rad(dh / 2.0));

    const double l_bar = (x.l + y.l) / 2.0;
    const double c_bar_p = (c1p + c2p) / 2.0;
    double h_bar = h1p + h2p;
    if (c1p * c2p != 0.0) {
        if (std::abs(h1p - h2p) <= 180.0) h_bar = (h1p + h2p) / 2.0;
        else if (h1p + h2p < 360.0) h_bar = (h1p + h2p + 360.0) / 2.0;
        else h_bar = (h1p + h2p - 360.0) / 2.0;
    }

    const double t = 1.0 - 0.17 * std::cos(rad(h_bar - 30.0)) + 0.24 * std::cos(rad(2.0 * h_bar)) +
                     0.32 * std::cos(rad(3.0 * h_bar + 6.0)) - 0.20 * std::cos(rad(4.0 * h_bar - 63.0));
    const double d_theta = 30.0 * std::exp(-std::pow((h_bar - 275.0) / 25.0, 2.0));
    const double c_bar_p7 = std::pow(c_bar_p, 7.0);
    const double r_c = 2.0 * std::sqrt(c_bar_p7 / (c_bar_p7 + pow25_7));
    const double l50 = (l_bar - 50.0) * (l_bar - 50.0);
    const double s_l = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
    const double s_c = 1.0 + 0.045 * c_bar_p;
    const double s_h = 1.0 + 0.015 * c_bar_p * t;
    const double r_t = -std::sin(rad(2.0 * d_theta)) * r_c;

    const double tl = dl / s_l;
    const double tc = dc / s_c;
    const double th = big_dh / s_h;
    return std::sqrt(tl * tl + tc * tc + th * th + r_t * tc * th);
}

DeltaEResult delta_e00(const RgbImage& a, const RgbImage& b) {
    check_same_shape(a.data(), b.data(), "delta_e00");
    DeltaEResult out;
    auto clamp01 = [&out](double v) {
        if (v < 0.0 || v > 1.0) {
            ++out.clamped_values;
            return std::clamp(v, 0.0, 1.0);
        }
        return v;
    };
    double total = 0.0;
    for (Index i = 0; i < a.pixels(); ++i) {
        const Lab la = linear_srgb_to_lab(clamp01(a.data()(0, i)), clamp01(a.data()(1, i)),
                                          clamp01(a.data()(2, i)));
        const Lab lb = linear_srgb_to_lab(clamp01(b.data()(0, i)), clamp01(b.data()(1, i)),
                                          clamp01(b.data()(2, i)));
        total += ciede2000(la, lb);
    }
    out.mean = total / static_cast<double>(a.pixels());
    return out;
}

Matrix mse_map(const SpectralCube& a, const SpectralCube& b) {
    check_same_shape(a.data(), b.data(), "mse_map");
    if (a.height() != b.height()) throw DimensionError("mse_map: spatial shapes differ");
    const Vector per_pixel = (a.data() - b.data()).colwise().squaredNorm().transpose() /
                             static_cast<double>(a.bands());
    Matrix plane(a.height(), a.width());
    for (Index r = 0; r < a.height(); ++r) {
        for (Index c = 0; c < a.width(); ++c) plane(r, c) = per_pixel[r * a.width() + c];
    }
    return plane;
}

void MetricReport::write_csv_header(std::ostream& out) { out << "psnr_db,ssim,sam_deg,delta_e00\n"; }

void MetricReport::write_csv_row(std::ostream& out) const {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17) << psnr_db << ',' << ssim << ',' << sam_deg << ',';
    if (delta_e00) out << *delta_e00;
    out << '\n';
    out.flags(flags);
    out.precision(precision);
}

MetricReport evaluate(const SpectralCube& ref, const SpectralCube& test,
                      const std::optional<ForwardOperator>& op) {
    MetricReport report;
    report.psnr_db = psnr(ref, test);
    report.ssim = ssim(ref, test);
    report.sam_deg = sam(ref, test).mean_deg;
    if (op) {
        const RgbImage ref_rgb = apply_phi(*op, ref);
        const RgbImage test_rgb = apply_phi(*op, test);
        const double top = ref_rgb.data().maxCoeff();
        const double scale = top > 0.0 ? 1.0 / top : 1.0;
        report.delta_e00 = delta_e00(RgbImage(ref_rgb.data() * scale, ref.height(), ref.width()),
                                     RgbImage(test_rgb.data() * scale, ref.height(), ref.width()))
                               .mean;
    }
    return report;
}

}  // namespace hsrecon
