#include <specinpaint/baselines.hpp>
#include <specinpaint/metrics.hpp>
#include <specinpaint/pca.hpp>
#include <specinpaint/solver.hpp>
#include <specinpaint/synth.hpp>
#include <specinpaint/transforms.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace si = specinpaint;
using json = nlohmann::ordered_json;

namespace {

enum Exit : int
{
    kOk = 0,
    kMismatch = 1,
    kUsage = 2,
    kIo = 3,
    kSolver = 4,
};

/// Thrown for flag values CLI11 cannot validate on its own.
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

si::SpectrumImage read_cube(const std::string& path)
{
    try {
        return si::load_cube(path);
    } catch (const si::NonFiniteError& e) {
        throw si::IoError(path + ": " + e.what());
    }
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& s, const std::string& flag)
{
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError(flag + ": expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw UsageError(flag + ": expected a finite number, got '" + s + "'");
    return v;
}

/// "auto" -> nullopt components with PCA on, "off" -> PCA off, integer -> fixed T.
struct PcaChoice
{
    bool enabled = true;
    std::optional<si::Index> components;
};

PcaChoice parse_pca(const std::string& s)
{
    if (s == "auto") return {};
    if (s == "off") return {false, std::nullopt};
    std::size_t used = 0;
    long long t = 0;
    try {
        t = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || t < 1) throw UsageError("--pca: expected auto, off or a positive integer, got '" + s + "'");
    return {true, static_cast<si::Index>(t)};
}

// ---------------------------------------------------------------- synth

struct SynthArgs
{
    si::SynthConfig config;
    std::string out_cube, out_clean, out_meta;
};

int run_synth(const SynthArgs& a)
{
    const auto& c = a.config;
    if (c.height < 1 || c.width < 1) throw UsageError("--height and --width must be positive");
    if (c.bands < 8) throw UsageError("--bands must be at least 8");
    if (c.components < 1) throw UsageError("--components must be positive");

    const auto s = si::generate_synthetic(c);
    si::store_cube(s.noisy, a.out_cube);
    si::store_cube(s.clean, a.out_clean);

    json meta;
    meta["seed"] = c.seed;
    meta["height"] = c.height;
    meta["width"] = c.width;
    meta["bands"] = c.bands;
    meta["components"] = c.components;
    meta["snr_db"] = c.snr_db;
    meta["sigma"] = s.sigma;
    meta["lattice"] = {{"period_x", c.lattice.period_x},
                       {"period_y", c.lattice.period_y},
                       {"blob_sigma", c.lattice.blob_sigma}};
    std::ofstream out(a.out_meta, std::ios::binary | std::ios::trunc);
    out << meta.dump(2) << '\n';
    if (!out) throw si::IoError("cannot write " + a.out_meta);
    std::cout << "sigma " << si::format_real(s.sigma) << '\n';
    return kOk;
}

// ---------------------------------------------------------------- mask

struct MaskArgs
{
    si::Index height = 70, width = 120;
    double ratio = 0.2;
    std::uint64_t seed = 0;
    std::string out, verify;
};

int run_mask(const MaskArgs& a)
{
    const auto m = si::make_mask(a.height, a.width, a.ratio, a.seed);
    if (!a.out.empty()) si::store_mask(m, a.out);
    std::cout << m.sampled_count() << '\n';
    if (!a.verify.empty()) {
        if (!(si::load_mask(a.verify) == m)) {
            std::cerr << "mask: " << a.verify << " differs from the mask generated by these flags\n";
            return kMismatch;
        }
        std::cout << "verified " << a.verify << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs
{
    std::string method = "cls";
    std::string in_cube, mask, out, meta, report;
    std::string lambda = "auto";
    std::optional<double> noise_sigma;
    std::string pca = "auto";
    std::optional<long long> pca_threshold;
    int max_iters = 1000;
    double rel_tol = 1e-5;
    si::Index k = 4;
};

std::string reconstruct_header()
{
    return "method,lambda,pca_components,iterations,converged,objective,data_fidelity,wall_time_s";
}

int run_reconstruct(const ReconstructArgs& a)
{
    std::optional<double> lambda;
    if (a.lambda != "auto") {
        lambda = parse_double(a.lambda, "--lambda");
        if (*lambda < 0.0) throw UsageError("--lambda must be non-negative");
    }
    PcaChoice pca = parse_pca(a.pca);
    if (a.pca_threshold) {
        if (*a.pca_threshold < 1) throw UsageError("--pca-threshold must be positive");
        pca = {true, static_cast<si::Index>(*a.pca_threshold)};
    }
    std::optional<double> sigma = a.noise_sigma;
    if (a.method == "cls" && !lambda && !sigma) {
        if (a.meta.empty()) throw UsageError("--lambda auto needs --noise-sigma or --meta");
        std::ifstream in(a.meta, std::ios::binary);
        if (!in) throw si::IoError("cannot open " + a.meta);
        try {
            sigma = json::parse(in).at("sigma").get<double>();
        } catch (const json::exception& e) {
            throw si::IoError(a.meta + ": " + e.what());
        }
    }
    if (sigma && !(*sigma >= 0.0)) throw UsageError("--noise-sigma must be non-negative");

    const auto cube = read_cube(a.in_cube);
    const auto mask = si::load_mask(a.mask);
    const auto y = si::apply_mask(cube, mask);

    std::string row = a.method;
    std::optional<si::SpectrumImage> result;
    const auto start = std::chrono::steady_clock::now();
    if (a.method == "cls") {
        si::ClsOptions opt;
        opt.use_pca = pca.enabled;
        opt.components = pca.components;
        opt.solver.lambda = lambda;
        opt.solver.max_iters = a.max_iters;
        opt.solver.rel_tol = a.rel_tol;
        opt.noise_sigma = sigma;
        auto r = si::cls_reconstruct(y, opt);
        const auto stop = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(stop - start).count();
        row += ',' + si::format_real(r.report.chosen_lambda) + ',' + std::to_string(r.components_used) + ',' +
               std::to_string(r.report.iterations_run) + ',' + (r.report.converged ? "1" : "0") + ',' +
               si::format_real(r.report.final_objective) + ',' + si::format_real(r.report.final_data_fidelity) + ',' +
               si::format_real(secs);
        std::cout << "cls: lambda " << si::format_real(r.report.chosen_lambda) << ", components "
                  << r.components_used << ", iterations " << r.report.iterations_run
                  << (r.report.converged ? "" : " (not converged)") << ", " << secs << " s\n";
        result = std::move(r.image);
    } else {
        result = a.method == "nn" ? si::nn_reconstruct(y) : si::weighted_nn_reconstruct(y, a.k);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row += ",,,,,,," + si::format_real(secs);
        std::cout << a.method << ": " << secs << " s\n";
    }

    si::store_cube(si::SpectrumImage(result->height(), result->width(), result->data(), cube.energy_axis()), a.out);
    if (!a.report.empty()) si::append_csv_row(a.report, reconstruct_header(), row);
    return kOk;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs
{
    std::string ref, rec, out_csv;
    std::string method = "rec";
    std::optional<double> wall_time;
};

int run_metrics(const MetricsArgs& a)
{
    const auto ref = read_cube(a.ref);
    const auto rec = read_cube(a.rec);
    const auto report = si::evaluate(rec, ref);
    const auto row = si::metrics_csv_row(a.method, report, a.wall_time);
    if (!a.out_csv.empty()) si::append_csv_row(a.out_csv, si::metrics_csv_header(), row);
    std::cout << si::metrics_csv_header() << '\n' << row << '\n';
    return kOk;
}

// ---------------------------------------------------------------- basis-scan

struct ScanArgs
{
    std::string in_cube, out_csv;
    std::string bases = "dct,fourier";
    std::string ratios = "0.01,0.02,0.05,0.1,0.2";
    std::string pca = "off";
};

int run_basis_scan(const ScanArgs& a)
{
    std::vector<si::BasisKind> bases;
    for (const auto& name : split(a.bases, ',')) {
        try {
            bases.push_back(si::basis_from_string(name));
        } catch (const si::InvalidArgument& e) {
            throw UsageError(std::string("--bases: ") + e.what());
        }
    }
    std::vector<double> ratios;
    for (const auto& r : split(a.ratios, ',')) {
        const double v = parse_double(r, "--ratios");
        if (!(v > 0.0 && v <= 1.0)) throw UsageError("--ratios: each ratio must lie in (0, 1], got " + r);
        ratios.push_back(v);
    }
    if (bases.empty() || ratios.empty()) throw UsageError("--bases and --ratios must not be empty");
    const PcaChoice pca = parse_pca(a.pca);

    si::SpectrumImage cube = read_cube(a.in_cube);
    if (pca.enabled) {
        // Threshold the PCA-denoised cube: keep T components, then back-project.
        const auto y = si::apply_mask(cube, si::SamplingMask::full(cube.height(), cube.width()));
        const auto model = si::pca_fit(y);
        const si::Index t = pca.components ? *pca.components : si::auto_threshold(y, model);
        cube = si::pca_backproject(si::embed(si::pca_project(y, model, t)), model);
        std::cout << "pca components " << t << '\n';
    }

    for (auto kind : bases) {
        for (double r : ratios) {
            const auto res = si::threshold_reconstruct(cube, kind, r);
            const std::string row = std::string(si::to_string(kind)) + ',' + si::format_real(r) + ',' +
                                    si::format_real(res.nmse);
            si::append_csv_row(a.out_csv, "basis,r,nmse", row);
            std::cout << row << '\n';
        }
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reconstruct spatially sub-sampled spectrum-images"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a seeded synthetic spectrum-image");
    c_synth->add_option("--height", synth.config.height, "Image height")->check(CLI::PositiveNumber);
    c_synth->add_option("--width", synth.config.width, "Image width")->check(CLI::PositiveNumber);
    c_synth->add_option("--bands", synth.config.bands, "Number of energy channels")->check(CLI::Range(8, 1 << 20));
    c_synth->add_option("--components", synth.config.components, "Number of mixed components")
        ->check(CLI::PositiveNumber);
    c_synth->add_option("--snr-db", synth.config.snr_db, "Signal-to-noise ratio of the noisy cube (dB)");
    c_synth->add_option("--seed", synth.config.seed, "Random seed");
    c_synth->add_option("--period-x", synth.config.lattice.period_x, "Lattice period along columns (pixels)");
    c_synth->add_option("--period-y", synth.config.lattice.period_y, "Lattice period along rows (pixels)");
    c_synth->add_option("--blob-sigma", synth.config.lattice.blob_sigma, "Width of the lattice blobs (pixels)");
    c_synth->add_option("--out-cube", synth.out_cube, "Noisy cube output")->required();
    c_synth->add_option("--out-clean", synth.out_clean, "Noise-free cube output")->required();
    c_synth->add_option("--out-meta", synth.out_meta, "Metadata JSON output")->required();

    MaskArgs mask;
    auto* c_mask = app.add_subcommand("mask", "Generate a seeded uniform sampling mask; prints the sample count");
    c_mask->add_option("--height", mask.height, "Image height")->check(CLI::PositiveNumber);
    c_mask->add_option("--width", mask.width, "Image width")->check(CLI::PositiveNumber);
    c_mask->add_option("--ratio", mask.ratio, "Fraction of pixels sampled")
        ->check(CLI::Validator(
            [](std::string& s) -> std::string {
                double v = 0.0;
                try {
                    v = std::stod(s);
                } catch (const std::exception&) {
                    return "not a number";
                }
                return v > 0.0 && v <= 1.0 ? "" : "ratio must lie in (0, 1]";
            },
            "(0,1]"));
    c_mask->add_option("--seed", mask.seed, "Random seed");
    c_mask->add_option("--out", mask.out, "Mask output file");
    c_mask->add_option("--verify", mask.verify, "Check that this mask file equals the generated mask");

    ReconstructArgs rec;
    auto* c_rec = app.add_subcommand("reconstruct", "Reconstruct a cube from its sampled pixels");
    c_rec->add_option("--method", rec.method, "Reconstruction method")->check(CLI::IsMember({"cls", "nn", "wnn"}));
    c_rec->add_option("--in-cube", rec.in_cube, "Input cube (only sampled pixels are read)")->required();
    c_rec->add_option("--mask", rec.mask, "Sampling mask")->required();
    c_rec->add_option("--out", rec.out, "Reconstructed cube output")->required();
    c_rec->add_option("--lambda", rec.lambda, "Regularization weight, or auto to match the noise level");
    c_rec->add_option("--noise-sigma", rec.noise_sigma, "Noise standard deviation for --lambda auto");
    c_rec->add_option("--meta", rec.meta, "Read the noise sigma from a synth metadata file");
    c_rec->add_option("--pca", rec.pca, "Principal components: auto, off, or a count");
    c_rec->add_option("--pca-threshold", rec.pca_threshold, "Fixed component count; overrides --pca");
    c_rec->add_option("--max-iters", rec.max_iters, "Iteration cap per solve")->check(CLI::PositiveNumber);
    c_rec->add_option("--rel-tol", rec.rel_tol, "Relative iterate-change stopping tolerance")
        ->check(CLI::PositiveNumber);
    c_rec->add_option("--k", rec.k, "Neighbours for wnn")->check(CLI::PositiveNumber);
    c_rec->add_option("--report", rec.report, "Append a CSV row with solver statistics");

    MetricsArgs met;
    auto* c_met = app.add_subcommand("metrics", "Compare a reconstruction with a reference cube");
    c_met->add_option("--ref", met.ref, "Reference cube")->required();
    c_met->add_option("--rec", met.rec, "Reconstructed cube")->required();
    c_met->add_option("--out-csv", met.out_csv, "Append the metrics row to this CSV");
    c_met->add_option("--method", met.method, "Label for the method column");
    c_met->add_option("--wall-time", met.wall_time, "Wall time to record, in seconds");

    ScanArgs scan;
    auto* c_scan = app.add_subcommand("basis-scan", "NMSE of best-r thresholding per basis and ratio");
    c_scan->add_option("--in-cube", scan.in_cube, "Input cube")->required();
    c_scan->add_option("--bases", scan.bases, "Comma-separated bases (dct, fourier)");
    c_scan->add_option("--ratios", scan.ratios, "Comma-separated kept-coefficient ratios");
    c_scan->add_option("--pca", scan.pca, "PCA denoising first: auto, off, or a count");
    c_scan->add_option("--out-csv", scan.out_csv, "CSV output (appended)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*c_synth) return run_synth(synth);
        if (*c_mask) return run_mask(mask);
        if (*c_rec) return run_reconstruct(rec);
        if (*c_met) return run_metrics(met);
        if (*c_scan) return run_basis_scan(scan);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const si::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const si::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const si::DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const si::UnreachableTarget& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const si::Error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    }
    return kUsage;
}
