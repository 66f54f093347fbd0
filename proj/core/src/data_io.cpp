#include "hsrecon/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hsrecon/errors.hpp"
#include "random.hpp"

namespace hsrecon {

namespace {

constexpr std::uint64_t kSceneStream = 10;
constexpr std::uint64_t kLowRankStream = 11;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_u32(Index v, const char* what) {
    if (v < 1 || static_cast<std::uint64_t>(v) > std::numeric_limits<std::uint32_t>::max()) {
        throw DimensionOverflowError(std::string("cube ") + what + " does not fit in u32");
    }
    return static_cast<std::uint32_t>(v);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_number(const std::string& raw, const std::filesystem::path& path, std::size_t line) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) lines.push_back(line);
    }
    return lines;
}

/// Rows of a `wavelength_nm,v1..vk` file: returns wavelengths and a k x B value matrix.
std::pair<Vector, Matrix> load_spectra(const std::filesystem::path& path, Index channels) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw ParseError(path.string() + ": empty file");
    const auto header = split(lines[0], ',');
    if (static_cast<Index>(header.size()) != channels + 1 || trim(header[0]) != "wavelength_nm") {
        throw ParseError(path.string() + ": expected header wavelength_nm plus " +
                         std::to_string(channels) + " value column(s)");
    }
    const Index bands = static_cast<Index>(lines.size()) - 1;
    if (bands < 1) throw ParseError(path.string() + ": no data rows");
    Vector wl(bands);
    Matrix values(channels, bands);
    for (Index b = 0; b < bands; ++b) {
        const std::size_t line_no = static_cast<std::size_t>(b) + 2;
        const auto fields = split(lines[static_cast<std::size_t>(b) + 1], ',');
        if (static_cast<Index>(fields.size()) != channels + 1) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
        }
        wl[b] = parse_number(fields[0], path, line_no);
        if (b > 0 && !(wl[b] > wl[b - 1])) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": wavelengths must be strictly increasing");
        }
        for (Index c = 0; c < channels; ++c) {
            values(c, b) = parse_number(fields[static_cast<std::size_t>(c) + 1], path, line_no);
        }
    }
    return {wl, values};
}

std::ofstream open_for_write(const std::filesystem::path& path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void SceneSpec::validate() const {
    if (bands < 1 || height < 1 || width < 1) throw PreconditionError("SceneSpec: dimensions must be >= 1");
    if (rank < 1 || rank > bands) throw PreconditionError("SceneSpec: need 1 <= rank <= bands");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw PreconditionError("SceneSpec: noise_sigma must be >= 0");
    }
}

SpectralCube synth_scene(const SceneSpec& spec) {
    spec.validate();
    auto engine = detail::seeded_engine(spec.seed, kSceneStream);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double b = static_cast<double>(spec.bands);

    Matrix signatures(spec.bands, spec.rank);
    for (Index j = 0; j < spec.rank; ++j) {
        const double center = unit(engine) * (b - 1.0);
        const double width = std::max(1.0, b / 10.0) + unit(engine) * b / 4.0;
        for (Index k = 0; k < spec.bands; ++k) {
            const double z = (static_cast<double>(k) - center) / width;
            signatures(k, j) = std::exp(-0.5 * z * z);
        }
        signatures.col(j) /= signatures.col(j).maxCoeff();
    }

    const double h = static_cast<double>(spec.height);
    const double w = static_cast<double>(spec.width);
    Matrix abundances(spec.rank, spec.height * spec.width);
    for (Index j = 0; j < spec.rank; ++j) {
        abundances.row(j).setConstant(0.05);
        for (int blob = 0; blob < 3; ++blob) {
            const double cy = unit(engine) * h;
            const double cx = unit(engine) * w;
            const double radius = 1.0 + unit(engine) * std::max(h, w) / 3.0;
            for (Index r = 0; r < spec.height; ++r) {
                for (Index c = 0; c < spec.width; ++c) {
                    const double dy = static_cast<double>(r) - cy;
                    const double dx = static_cast<double>(c) - cx;
                    abundances(j, r * spec.width + c) += std::exp(-(dy * dy + dx * dx) / (2.0 * radius * radius));
                }
            }
        }
    }
    // One global scale keeps every pixel's abundance sum <= 1, so A C stays in [0, 1].
    abundances /= abundances.colwise().sum().maxCoeff();

    Matrix cube = signatures * abundances;
    if (spec.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (Index c = 0; c < cube.cols(); ++c) {
            for (Index r = 0; r < cube.rows(); ++r) cube(r, c) += noise(engine);
        }
    }
    cube = cube.cwiseMax(0.0).cwiseMin(1.0);
    return SpectralCube(std::move(cube), spec.height, spec.width);
}

Matrix synth_low_rank(Index d, Index n, Index rank, double snr_db, std::uint64_t seed) {
    if (d < 1 || n < 1 || rank < 1 || rank > std::min(d, n)) {
        throw PreconditionError("synth_low_rank: need 1 <= rank <= min(d, n)");
    }
    auto engine = detail::seeded_engine(seed, kLowRankStream);
    const Matrix left = detail::gaussian_matrix(d, rank, engine);
    const Matrix right = detail::gaussian_matrix(rank, n, engine);
    Matrix m = left * right;
    if (std::isinf(snr_db) && snr_db > 0.0) return m;
    Matrix noise = detail::gaussian_matrix(d, n, engine);
    noise *= m.norm() / (noise.norm() * std::pow(10.0, snr_db / 20.0));
    return m + noise;
}

Vector wavelength_grid(Index bands) {
    if (bands < 1) throw PreconditionError("wavelength_grid: bands must be >= 1");
    if (bands == 1) return Vector::Constant(1, 550.0);
    return Vector::LinSpaced(bands, 400.0, 700.0);
}

Sensitivity synth_css(Index bands) {
    if (bands < 3) throw PreconditionError("synth_css: at least 3 bands required");
    const Vector wl = wavelength_grid(bands);
    constexpr double centers[3] = {650.0, 550.0, 450.0};
    constexpr double sigma_nm = 40.0;
    Matrix s(3, bands);
    for (Index c = 0; c < 3; ++c) {
        for (Index k = 0; k < bands; ++k) {
            const double z = (wl[k] - centers[c]) / sigma_nm;
            s(c, k) = std::exp(-0.5 * z * z);
        }
        s.row(c) /= s.row(c).maxCoeff();
    }
    return Sensitivity(std::move(s), wl);
}

Illuminant flat_illuminant(Index bands) { return Illuminant(Vector::Ones(bands), wavelength_grid(bands)); }

RgbImage render_rgb(const SpectralCube& y, const Sensitivity& s, const Illuminant& ell) {
    return apply_phi(make_phi(s, ell), y);
}

void write_cube(std::ostream& out, const SpectralCube& y) {
    const std::uint32_t b = checked_u32(y.bands(), "band count");
    const std::uint32_t h = checked_u32(y.height(), "height");
    const std::uint32_t w = checked_u32(y.width(), "width");
    std::vector<unsigned char> buf;
    buf.reserve(static_cast<std::size_t>(kCubeHeaderBytes) + 4 * static_cast<std::size_t>(y.data().size()));
    buf.insert(buf.end(), std::begin(kCubeMagic), std::end(kCubeMagic));
    put_u32(buf, b);
    put_u32(buf, h);
    put_u32(buf, w);
    for (Index band = 0; band < y.bands(); ++band) {
        for (Index p = 0; p < y.pixels(); ++p) {
            const float v = static_cast<float>(y.data()(band, p));
            if (!std::isfinite(v)) throw NumericError("write_cube: sample not representable as float32");
            put_u32(buf, std::bit_cast<std::uint32_t>(v));
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write_cube: stream write failed");
}

void write_cube(const std::filesystem::path& path, const SpectralCube& y) {
    auto out = open_for_write(path, true);
    write_cube(out, y);
    finish(out, path);
}

SpectralCube read_cube(std::istream& in) {
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::uint64_t actual = bytes.size();
    const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 4);
    if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len), std::begin(kCubeMagic))) {
        throw BadMagicError("not a cube file: bad magic");
    }
    if (actual < kCubeHeaderBytes) throw TruncatedFileError(kCubeHeaderBytes, actual);

    const std::uint64_t b = get_u32(bytes.data() + 4);
    const std::uint64_t h = get_u32(bytes.data() + 8);
    const std::uint64_t w = get_u32(bytes.data() + 12);
    if (b == 0 || h == 0 || w == 0) throw DimensionOverflowError("cube header has a zero dimension");
    // b * h * w * 4 must fit in 63 bits.
    constexpr std::uint64_t limit = std::numeric_limits<std::int64_t>::max() / 4;
    if (h > limit / w || b > limit / (h * w)) {
        throw DimensionOverflowError("cube dimensions overflow: " + std::to_string(b) + "x" +
                                     std::to_string(h) + "x" + std::to_string(w));
    }
    const std::uint64_t count = b * h * w;
    const std::uint64_t expected = kCubeHeaderBytes + 4 * count;
    if (actual < expected) throw TruncatedFileError(expected, actual);
    if (actual > expected) throw TrailingDataError(expected, actual);

    const Index bands = static_cast<Index>(b);
    const Index pixels = static_cast<Index>(h * w);
    Matrix data(bands, pixels);
    const unsigned char* p = bytes.data() + kCubeHeaderBytes;
    for (Index band = 0; band < bands; ++band) {
        for (Index px = 0; px < pixels; ++px, p += 4) {
            data(band, px) = static_cast<double>(std::bit_cast<float>(get_u32(p)));
        }
    }
    return SpectralCube(std::move(data), static_cast<Index>(h), static_cast<Index>(w));
}

SpectralCube read_cube(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_cube(in);
}

void write_rgb(const std::filesystem::path& path, const RgbImage& x) {
    write_cube(path, SpectralCube(x.data(), x.height(), x.width()));
}

RgbImage read_rgb(const std::filesystem::path& path) {
    const SpectralCube c = read_cube(path);
    if (c.bands() != 3) {
        throw DimensionError(path.string() + ": expected 3 channels, found " + std::to_string(c.bands()));
    }
    return RgbImage(c.data(), c.height(), c.width());
}

void write_plane(const std::filesystem::path& path, const Matrix& plane) {
    Matrix row(1, plane.size());
    for (Index r = 0; r < plane.rows(); ++r) {
        for (Index c = 0; c < plane.cols(); ++c) row(0, r * plane.cols() + c) = plane(r, c);
    }
    write_cube(path, SpectralCube(std::move(row), plane.rows(), plane.cols()));
}

Sensitivity load_sensitivity_csv(const std::filesystem::path& path) {
    auto [wl, values] = load_spectra(path, 3);
    try {
        return Sensitivity(std::move(values), std::move(wl));
    } catch (const PreconditionError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

Illuminant load_illuminant_csv(const std::filesystem::path& path) {
    auto [wl, values] = load_spectra(path, 1);
    try {
        Illuminant ell(values.row(0).transpose(), std::move(wl));
        if (ell.all_zero()) throw PreconditionError("illuminant spectrum is all zero");
        return ell;
    } catch (const PreconditionError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_sensitivity_csv(const std::filesystem::path& path, const Sensitivity& s) {
    auto out = open_for_write(path, false);
    out << "wavelength_nm,v1,v2,v3\n";
    for (Index b = 0; b < s.bands(); ++b) {
        out << s.wavelengths()[b] << ',' << s.matrix()(0, b) << ',' << s.matrix()(1, b) << ','
            << s.matrix()(2, b) << '\n';
    }
    finish(out, path);
}

void save_illuminant_csv(const std::filesystem::path& path, const Illuminant& ell) {
    auto out = open_for_write(path, false);
    out << "wavelength_nm,v1\n";
    for (Index b = 0; b < ell.bands(); ++b) {
        out << ell.wavelengths()[b] << ',' << ell.spectrum()[b] << '\n';
    }
    finish(out, path);
}

ForwardOperator load_phi_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.size() != 3) {
        throw ParseError(path.string() + ": expected 3 rows, found " + std::to_string(lines.size()));
    }
    Matrix phi;
    for (std::size_t r = 0; r < 3; ++r) {
        const auto fields = split(lines[r], ',');
        if (r == 0) phi.resize(3, static_cast<Index>(fields.size()));
        if (static_cast<Index>(fields.size()) != phi.cols()) {
            throw ParseError(path.string() + ":" + std::to_string(r + 1) + ": ragged row");
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            phi(static_cast<Index>(r), static_cast<Index>(c)) = parse_number(fields[c], path, r + 1);
        }
    }
    return ForwardOperator(std::move(phi));
}

void save_phi_csv(const std::filesystem::path& path, const ForwardOperator& op) {
    auto out = open_for_write(path, false);
    for (Index r = 0; r < 3; ++r) {
        for (Index c = 0; c < op.bands(); ++c) {
            if (c > 0) out << ',';
            out << op.phi()(r, c);
        }
        out << '\n';
    }
    finish(out, path);
}

}  // namespace hsrecon
