#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "hsrecon/hsrecon.hpp"

namespace hsrecon::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Collects outputs under temporary names and renames them into place only when every
/// write succeeded. Uncommitted temporaries are removed on destruction.
class StagedOutputs {
public:
    StagedOutputs() = default;
    StagedOutputs(const StagedOutputs&) = delete;
    StagedOutputs& operator=(const StagedOutputs&) = delete;

    ~StagedOutputs() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& [tmp, final_path] : entries_) fs::remove(tmp, ec);
    }

    fs::path stage(const fs::path& final_path) {
        fs::path tmp = final_path;
        tmp += ".tmp." + std::to_string(::getpid());
        entries_.emplace_back(tmp, final_path);
        return tmp;
    }

    void commit() {
        for (const auto& [tmp, final_path] : entries_) {
            std::error_code ec;
            fs::rename(tmp, final_path, ec);
            if (ec) throw IoError("cannot move " + tmp.string() + " to " + final_path.string() + ": " + ec.message());
        }
        committed_ = true;
    }

private:
    std::vector<std::pair<fs::path, fs::path>> entries_;
    bool committed_ = false;
};

std::ofstream open_text(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    return out;
}

void close_text(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> parse_eta(const std::string& text) {
    if (text == "auto") return {};
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(text);
        return {v};
    } catch (const std::exception&) {
        throw UsageError("--eta expects 'auto' or a positive number, got '" + text + "'");
    }
}

template <class T>
double median(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? static_cast<double>(v[mid]) : 0.5 * (static_cast<double>(v[mid - 1]) + static_cast<double>(v[mid]));
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
    SceneSpec scene;
    std::string out;
    std::string rgb_out;
    std::string phi_out;
    std::string css_out;
    std::string illuminant_out;
};

void add_synth(CLI::App& app, SynthOptions& o) {
    app.add_option("--bands", o.scene.bands, "Spectral bands B")->required()->check(CLI::PositiveNumber);
    app.add_option("--size", o.scene.height, "Spatial size (H = W)")->required()->check(CLI::PositiveNumber);
    app.add_option("--rank", o.scene.rank, "Spectral rank of the clean scene")->required()->check(CLI::PositiveNumber);
    app.add_option("--noise", o.scene.noise_sigma, "Additive Gaussian noise std")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", o.scene.seed, "RNG seed");
    app.add_option("--out", o.out, "Output cube (.hsc)")->required();
    app.add_option("--rgb-out", o.rgb_out, "Also render RGB with the synthetic CSS and flat illuminant");
    app.add_option("--phi-out", o.phi_out, "Also write the rendering operator as CSV");
    app.add_option("--css-out", o.css_out, "Also write the synthetic CSS as CSV");
    app.add_option("--illuminant-out", o.illuminant_out, "Also write the illuminant as CSV");
}

void run_synth(SynthOptions o, std::ostream& out) {
    o.scene.width = o.scene.height;
    const SpectralCube cube = synth_scene(o.scene);
    const bool needs_css = !o.rgb_out.empty() || !o.phi_out.empty() || !o.css_out.empty() || !o.illuminant_out.empty();

    StagedOutputs staged;
    write_cube(staged.stage(o.out), cube);
    if (needs_css) {
        const Sensitivity css = synth_css(o.scene.bands);
        const Illuminant ell = flat_illuminant(o.scene.bands);
        if (!o.rgb_out.empty()) write_rgb(staged.stage(o.rgb_out), render_rgb(cube, css, ell));
        if (!o.phi_out.empty()) save_phi_csv(staged.stage(o.phi_out), make_phi(css, ell));
        if (!o.css_out.empty()) save_sensitivity_csv(staged.stage(o.css_out), css);
        if (!o.illuminant_out.empty()) save_illuminant_csv(staged.stage(o.illuminant_out), ell);
    }
    staged.commit();
    out << "synth: wrote " << o.out << " (" << cube.bands() << "x" << cube.height() << "x" << cube.width() << ")\n";
}

// ------------------------------------------------------------ calibrate

struct CalibrateOptions {
    std::string rgb;
    std::string cube;
    double ridge = 0.0;
    std::string out_phi;
    std::string css;
    std::string illuminant_out;
};

void add_calibrate(CLI::App& app, CalibrateOptions& o) {
    app.add_option("--rgb", o.rgb, "Calibration RGB (3-band cube file)")->required();
    app.add_option("--cube", o.cube, "Calibration spectral cube")->required();
    app.add_option("--ridge", o.ridge, "Ridge weight")->check(CLI::NonNegativeNumber);
    app.add_option("--out-phi", o.out_phi, "Estimated operator CSV")->required();
    auto* css = app.add_option("--css", o.css, "Known CSS (CSV); enables illuminant recovery");
    app.add_option("--illuminant-out", o.illuminant_out, "Recovered illuminant CSV")->needs(css);
}

void run_calibrate(const CalibrateOptions& o, std::ostream& out, std::ostream& err) {
    const RgbImage x = read_rgb(o.rgb);
    const SpectralCube y = read_cube(o.cube);
    const ForwardOperator phi = estimate_phi_ls(x, y, o.ridge);
    if (const Index neg = phi.negative_entry_count(); neg > 0) {
        err << "warning: estimated operator has " << neg << " negative entries\n";
    }
    StagedOutputs staged;
    save_phi_csv(staged.stage(o.out_phi), phi);
    if (!o.css.empty()) {
        const Sensitivity css = load_sensitivity_csv(o.css);
        const Illuminant ell = estimate_illuminant(css, phi);
        if (!o.illuminant_out.empty()) save_illuminant_csv(staged.stage(o.illuminant_out), ell);
    }
    staged.commit();
    out << "calibrate: wrote " << o.out_phi << " (3x" << phi.bands() << ")\n";
}

// ---------------------------------------------------------- reconstruct

struct ReconstructOptions {
    std::string rgb;
    std::string phi;
    std::vector<std::string> calibrate_from;
    double calibrate_ridge = 0.0;
    Index stages = 3;
    std::string eta = "auto";
    double lambda = 0.01;
    std::string transform = "dct";
    std::string init = "pseudoinverse";
    bool exact = false;
    LrspConfig lrsp;
    std::optional<double> theta;
    double mu = 0.5;
    std::string out;
    std::string report;
    std::string diagnostics;
    std::string mse_map;
    std::string ref;
};

void add_reconstruct(CLI::App& app, ReconstructOptions& o) {
    app.add_option("--rgb", o.rgb, "Observed RGB (3-band cube file)")->required();
    auto* phi = app.add_option("--phi", o.phi, "Forward operator CSV (3 x B)");
    auto* cal = app.add_option("--calibrate-from", o.calibrate_from, "RGB and cube calibration pair")
                    ->expected(2);
    phi->excludes(cal);
    app.add_option("--calibrate-ridge", o.calibrate_ridge, "Ridge for --calibrate-from")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--stages", o.stages, "Unfolding stages K")->check(CLI::PositiveNumber);
    app.add_option("--eta", o.eta, "Step size: auto or a positive value");
    app.add_option("--lambda", o.lambda, "Nuclear-norm weight")->check(CLI::NonNegativeNumber);
    app.add_option("--transform", o.transform, "Spectral transform")->check(CLI::IsMember({"identity", "dct"}));
    app.add_option("--init", o.init, "Initial estimate")->check(CLI::IsMember({"zeros", "adjoint", "pseudoinverse"}));
    app.add_flag("--exact", o.exact, "Exactness regime: full-rank, full-budget proximal (plain ISTA)");
    app.add_option("--rank", o.lrsp.rank, "Subspace rank r")->check(CLI::PositiveNumber);
    app.add_option("--kappa", o.lrsp.kappa, "Column budget")->check(CLI::PositiveNumber);
    app.add_option("--probes", o.lrsp.probes, "Gaussian probes")->check(CLI::PositiveNumber);
    app.add_option("--inner-steps", o.lrsp.inner_steps, "Proposals per stage T")->check(CLI::PositiveNumber);
    app.add_option("--tau0", o.lrsp.tau0, "Initial temperature");
    app.add_option("--gamma", o.lrsp.gamma, "Temperature decay");
    app.add_option("--tau-min", o.lrsp.tau_min, "Temperature floor");
    app.add_option("--beta1", o.lrsp.beta1, "Initial gate logit");
    app.add_option("--c-beta", o.lrsp.c_beta, "Gate increment coefficient");
    app.add_option("--nu", o.lrsp.nu, "Fusion sharpness");
    app.add_option("--theta", o.theta, "Subspace threshold (default lambda * eta)");
    app.add_option("--mu", o.mu, "Memory EMA decay");
    app.add_option("--seed", o.lrsp.seed, "RNG seed");
    app.add_option("--out", o.out, "Reconstructed cube")->required();
    app.add_option("--report", o.report, "Per-stage report CSV")->required();
    app.add_option("--diagnostics", o.diagnostics, "Per-inner-step proximal diagnostics");
    auto* map = app.add_option("--mse-map", o.mse_map, "Per-pixel MSE map against --ref (1-band cube)");
    auto* ref = app.add_option("--ref", o.ref, "Ground-truth cube for --mse-map");
    map->needs(ref);
}

void run_reconstruct(ReconstructOptions o, std::ostream& out, std::ostream& err) {
    if (o.phi.empty() && o.calibrate_from.empty()) {
        throw UsageError("reconstruct needs --phi or --calibrate-from");
    }
    SolverConfig config;
    config.stages = o.stages;
    config.eta = parse_eta(o.eta);
    config.lambda = o.lambda;
    config.transform = parse_transform_kind(o.transform);
    config.init = parse_init_mode(o.init);
    config.exactness_regime = o.exact;
    config.memory_decay = o.mu;

    const RgbImage x = read_rgb(o.rgb);
    const ForwardOperator phi = [&] {
        if (!o.phi.empty()) return load_phi_csv(o.phi);
        return estimate_phi_ls(read_rgb(o.calibrate_from[0]), read_cube(o.calibrate_from[1]), o.calibrate_ridge);
    }();
    if (const Index neg = phi.negative_entry_count(); neg > 0) {
        err << "warning: forward operator has " << neg << " negative entries\n";
    }
    std::optional<SpectralCube> ref;
    if (!o.ref.empty()) ref = read_cube(o.ref);

    config.lrsp = o.lrsp;
    if (o.theta) {
        config.lrsp.theta = *o.theta;
    } else {
        const auto etas = resolve_step_sizes(config, phi);
        config.lrsp.theta = config.lambda * etas.front();
    }
    if (!o.exact) config.lrsp.validate(phi.bands(), x.pixels());

    const SolveResult result = unfold_solve(x, phi, config);

    StagedOutputs staged;
    write_cube(staged.stage(o.out), result.estimate);
    {
        const fs::path p = staged.stage(o.report);
        auto f = open_text(p);
        result.report.write_csv(f);
        close_text(f, p);
    }
    if (!o.diagnostics.empty()) {
        const fs::path p = staged.stage(o.diagnostics);
        auto f = open_text(p);
        result.report.write_diagnostics(f);
        close_text(f, p);
    }
    if (!o.mse_map.empty()) write_plane(staged.stage(o.mse_map), hsrecon::mse_map(*ref, result.estimate));
    staged.commit();

    out << std::setprecision(10) << "reconstruct: " << result.report.stages.size()
        << " stages, final objective " << result.report.stages.back().objective << '\n';
}

// ------------------------------------------------------------ svt-bench

struct BenchOptions {
    Index d = 64;
    Index n = 4096;
    Index r = 8;
    double theta = 0.5;
    Index seeds = 5;
    Index kappa = 64;
    Index inner_steps = 3;
    Index probes = 8;
    double snr_db = 40.0;
    std::string out;
};

void add_bench(CLI::App& app, BenchOptions& o) {
    app.add_option("--d", o.d, "Rows d")->check(CLI::PositiveNumber);
    app.add_option("--n", o.n, "Columns n")->check(CLI::PositiveNumber);
    app.add_option("--r", o.r, "Rank r")->check(CLI::PositiveNumber);
    app.add_option("--theta", o.theta, "Threshold")->check(CLI::NonNegativeNumber);
    app.add_option("--seeds", o.seeds, "Number of random instances")->check(CLI::PositiveNumber);
    app.add_option("--kappa", o.kappa, "Column budget (capped at n)")->check(CLI::PositiveNumber);
    app.add_option("--inner-steps", o.inner_steps, "Proposals per call")->check(CLI::PositiveNumber);
    app.add_option("--probes", o.probes, "Gaussian probes")->check(CLI::PositiveNumber);
    app.add_option("--snr", o.snr_db, "Signal-to-noise ratio of the test matrices (dB)");
    app.add_option("--out", o.out, "Timing CSV")->required();
}

void run_bench(const BenchOptions& o, std::ostream& out) {
    using Clock = std::chrono::steady_clock;
    const auto ns = [](Clock::time_point a, Clock::time_point b) {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
    };
    LrspConfig config;
    config.rank = o.r;
    config.kappa = std::min(o.kappa, o.n);
    config.inner_steps = o.inner_steps;
    config.probes = o.probes;
    config.theta = o.theta;
    config.validate(o.d, o.n);

    StagedOutputs staged;
    const fs::path p = staged.stage(o.out);
    auto f = open_text(p);
    f << "method,d,n,r,seed,elapsed_ns,rel_error\n";
    std::vector<std::int64_t> full_times;
    std::vector<std::int64_t> lrsp_times;
    for (Index s = 0; s < o.seeds; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        const Matrix u = synth_low_rank(o.d, o.n, o.r, o.snr_db, seed);

        auto t0 = Clock::now();
        [[maybe_unused]] const Matrix full = svt_full(u, ShrinkageThreshold(o.theta));
        auto t1 = Clock::now();
        config.seed = seed;
        const LrspResult approx = lrsp_apply(u, config, LrspState::initial(config));
        auto t2 = Clock::now();

        const Matrix target = svt_full(u, ShrinkageThreshold(o.theta * approx.diagnostics.effective_alpha));
        const double denom = std::max(target.norm(), 1e-300);
        full_times.push_back(ns(t0, t1));
        lrsp_times.push_back(ns(t1, t2));
        f << "full_svt," << o.d << ',' << o.n << ',' << o.r << ',' << s << ',' << ns(t0, t1) << ",0\n";
        f << "lrsp," << o.d << ',' << o.n << ',' << o.r << ',' << s << ',' << ns(t1, t2) << ','
          << (approx.output - target).norm() / denom << '\n';
    }
    close_text(f, p);
    staged.commit();
    out << "svt-bench: median full_svt " << median(full_times) << " ns, lrsp " << median(lrsp_times) << " ns\n";
}

// -------------------------------------------------------------- metrics

struct MetricsOptions {
    std::string ref;
    std::string test;
    std::string phi;
    std::string out;
};

void add_metrics(CLI::App& app, MetricsOptions& o) {
    app.add_option("--ref", o.ref, "Reference cube")->required();
    app.add_option("--test", o.test, "Cube under test")->required();
    app.add_option("--phi", o.phi, "Operator CSV used to render RGB for the color difference");
    app.add_option("--out", o.out, "Metric CSV")->required();
}

void run_metrics(const MetricsOptions& o, std::ostream& out) {
    const SpectralCube ref = read_cube(o.ref);
    const SpectralCube test = read_cube(o.test);
    std::optional<ForwardOperator> phi;
    if (!o.phi.empty()) phi = load_phi_csv(o.phi);
    const MetricReport report = evaluate(ref, test, phi);

    StagedOutputs staged;
    const fs::path p = staged.stage(o.out);
    auto f = open_text(p);
    MetricReport::write_csv_header(f);
    report.write_csv_row(f);
    close_text(f, p);
    staged.commit();
    out << "metrics: ";
    report.write_csv_row(out);
}

int fail(std::ostream& err, const char* kind, int code, const std::string& message) {
    std::string line = message;
    std::replace(line.begin(), line.end(), '\n', ' ');
    err << "error: kind=" << kind << " code=" << code << " message=" << line << '\n';
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-rank subspace RGB-to-hyperspectral reconstruction", "hsrecon"};
    app.require_subcommand(1, 1);

    SynthOptions synth;
    CalibrateOptions calibrate;
    ReconstructOptions reconstruct;
    BenchOptions bench;
    MetricsOptions metrics;

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic low-rank scene");
    add_synth(*synth_cmd, synth);
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Estimate the forward operator from paired data");
    add_calibrate(*calibrate_cmd, calibrate);
    auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Reconstruct a cube from RGB");
    add_reconstruct(*reconstruct_cmd, reconstruct);
    auto* bench_cmd = app.add_subcommand("svt-bench", "Time full SVT against the subspace proximal");
    add_bench(*bench_cmd, bench);
    auto* metrics_cmd = app.add_subcommand("metrics", "PSNR / SSIM / SAM / color difference");
    add_metrics(*metrics_cmd, metrics);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return fail(err, "usage", kExitUsage, e.what());
    }

    try {
        if (*synth_cmd) run_synth(synth, out);
        else if (*calibrate_cmd) run_calibrate(calibrate, out, err);
        else if (*reconstruct_cmd) run_reconstruct(reconstruct, out, err);
        else if (*bench_cmd) run_bench(bench, out);
        else if (*metrics_cmd) run_metrics(metrics, out);
        return kExitOk;
    } catch (const UsageError& e) {
        return fail(err, "usage", kExitUsage, e.what());
    } catch (const IoError& e) {
        return fail(err, "io", kExitIo, e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(err, "io", kExitIo, e.what());
    } catch (const NumericError& e) {
        return fail(err, "numeric", kExitNumeric, e.what());
    } catch (const Error& e) {
        // Dimension, precondition and selection errors come from inconsistent inputs.
        return fail(err, "usage", kExitUsage, e.what());
    } catch (const std::exception& e) {
        return fail(err, "numeric", kExitNumeric, e.what());
    }
}

}  // namespace hsrecon::cli
