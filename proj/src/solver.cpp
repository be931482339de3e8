#include <specinpaint/solver.hpp>
#include <specinpaint/transforms.hpp>

#include <cmath>

namespace specinpaint {

void SolverConfig::validate() const
{
    if (lambda && !(*lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
    if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
    if (target_residual && !(*target_residual >= 0.0)) throw InvalidArgument("target_residual must be non-negative");
    if (lambda_bracket) {
        const auto [lo, hi] = *lambda_bracket;
        if (!(lo > 0.0) || !(lo < hi)) throw InvalidArgument("lambda bracket needs 0 < lo < hi");
    }
    if (!(search_tol > 0.0)) throw InvalidArgument("search_tol must be positive");
    if (max_probes < 2) throw InvalidArgument("max_probes must be >= 2");
}

namespace {

void check_dims(const SpectrumImage& x, const Observation& y)
{
    const auto& m = y.mask();
    if (x.height() != m.height() || x.width() != m.width() || x.bands() != y.bands()) {
        throw DimensionMismatch("image " + std::to_string(x.height()) + "x" + std::to_string(x.width()) + "x" +
                                std::to_string(x.bands()) + " does not match observation " +
                                std::to_string(m.height()) + "x" + std::to_string(m.width()) + "x" +
                                std::to_string(y.bands()));
    }
}

double data_fidelity(const CubeMatrix& x, const Observation& y)
{
    const auto& idx = y.mask().indices();
    double sum = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        sum += (x.col(idx[j]) - y.values().col(static_cast<Index>(j))).squaredNorm();
    }
    return 0.5 * sum;
}

/// Z - grad f(Z) with L = 1: sampled pixels take the observed spectra.
void gradient_step(CubeMatrix& z, const Observation& y)
{
    const auto& idx = y.mask().indices();
    for (std::size_t j = 0; j < idx.size(); ++j) {
        z.col(idx[j]) = y.values().col(static_cast<Index>(j));
    }
}

/// In-place group shrinkage of coefficient columns; returns the l2,1 norm of the result.
double shrink_columns(CubeMatrix& coeffs, double tau)
{
    double reg = 0.0;
    for (Index j = 0; j < coeffs.cols(); ++j) {
        const double nj = coeffs.col(j).norm();
        if (nj < tau) {
            coeffs.col(j).setZero();
        } else {
            const double scale = 1.0 - tau / nj;
            coeffs.col(j) *= scale;
            reg += scale * nj;
        }
    }
    return reg;
}

/// prox of tau ||. Psi||_{2,1}; identity when tau is zero.
void apply_prox(const BandDct& dct, const CubeMatrix& in, double tau, CubeMatrix& coeffs, CubeMatrix& out)
{
    if (tau == 0.0) {
        out = in;
        return;
    }
    dct.forward(in, coeffs);
    shrink_columns(coeffs, tau);
    dct.inverse(coeffs, out);
}

} // namespace

ObjectiveTerms objective(const SpectrumImage& x, const Observation& y, double lambda)
{
    check_dims(x, y);
    const CubeMatrix coeffs = BandDct(x.height(), x.width()).forward(x.data());
    return ObjectiveTerms{data_fidelity(x.data(), y), lambda * coeffs.colwise().norm().sum()};
}

SpectrumImage grad_f(const SpectrumImage& x, const Observation& y)
{
    check_dims(x, y);
    CubeMatrix g = CubeMatrix::Zero(x.bands(), x.pixels());
    const auto& idx = y.mask().indices();
    for (std::size_t j = 0; j < idx.size(); ++j) {
        g.col(idx[j]) = x.data().col(idx[j]) - y.values().col(static_cast<Index>(j));
    }
    return SpectrumImage(x.height(), x.width(), std::move(g));
}

SpectrumImage prox_g(const SpectrumImage& x, double tau)
{
    if (!(tau >= 0.0)) throw InvalidArgument("prox_g: tau must be non-negative");
    if (tau == 0.0) return x;
    const BandDct dct(x.height(), x.width());
    CubeMatrix coeffs, out;
    apply_prox(dct, x.data(), tau, coeffs, out);
    return SpectrumImage(x.height(), x.width(), std::move(out));
}

Reconstruction fista(const Observation& y, double lambda, const SolverConfig& config,
                     const std::optional<SpectrumImage>& initial)
{
    config.validate();
    if (!(lambda >= 0.0)) throw InvalidArgument("fista: lambda must be non-negative");
    const auto& mask = y.mask();
    const Index h = mask.height(), w = mask.width();
    if (initial) check_dims(*initial, y);

    const BandDct dct(h, w);
    constexpr double L = 1.0;
    const double tau = lambda / L;

    CubeMatrix x_prev = initial ? initial->data() : embed(y).data();
    CubeMatrix z = x_prev;
    CubeMatrix x, coeffs;
    double theta = 1.0;

    SolverReport report;
    report.chosen_lambda = lambda;
    report.objective_trace.reserve(static_cast<std::size_t>(std::min(config.max_iters, 4096)));

    for (int it = 1; it <= config.max_iters; ++it) {
        gradient_step(z, y);
        double reg = 0.0;
        if (tau == 0.0) {
            x = z;
        } else {
            dct.forward(z, coeffs);
            reg = shrink_columns(coeffs, tau);
            dct.inverse(coeffs, x);
        }
        if (!x.allFinite()) {
            throw NonFiniteError("fista: non-finite iterate at iteration " + std::to_string(it) +
                                 " (check input scaling)");
        }
        report.objective_trace.push_back(data_fidelity(x, y) + lambda * reg);
        report.iterations_run = it;

        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        const double change = (x - x_prev).norm() / std::max(x_prev.norm(), 1e-12);
        z = x + ((theta - 1.0) / theta_next) * (x - x_prev);
        x_prev.swap(x);
        theta = theta_next;
        if (change < config.rel_tol) {
            report.converged = true;
            break;
        }
    }

    SpectrumImage image(h, w, std::move(x_prev));
    const ObjectiveTerms terms = objective(image, y, 1.0);
    report.final_data_fidelity = terms.f;
    report.final_regularizer = terms.g;
    report.final_objective = terms.f + lambda * terms.g;
    return Reconstruction{std::move(image), std::move(report)};
}

double fixed_point_residual(const SpectrumImage& x, const Observation& y, double lambda)
{
    check_dims(x, y);
    CubeMatrix z = x.data();
    gradient_step(z, y);
    const BandDct dct(x.height(), x.width());
    CubeMatrix coeffs, p;
    apply_prox(dct, z, lambda, coeffs, p);
    return (x.data() - p).norm() / std::max(x.data().norm(), 1.0);
}

double noise_residual_target(double sigma, const Observation& y)
{
    return 0.5 * sigma * sigma * double(y.bands()) * double(y.sampled_count());
}

LambdaSearchResult lambda_search(const Observation& y, const SolverConfig& config)
{
    config.validate();
    if (!config.target_residual) throw InvalidArgument("lambda_search needs a target residual");
    const double target = *config.target_residual;
    const double norm_y = y.values().norm();
    const auto [lo, hi] = config.lambda_bracket.value_or(std::pair{1e-6 * norm_y, 1e2 * norm_y});
    if (!(lo > 0.0)) throw InvalidArgument("lambda_search: empty observation gives an empty bracket");

    int probes = 0;
    std::optional<SpectrumImage> warm;
    std::optional<LambdaSearchResult> best;
    auto probe = [&](double lambda) {
        Reconstruction r = fista(y, lambda, config, warm);
        ++probes;
        warm = r.image;
        LambdaSearchResult res{lambda, std::move(r.image), std::move(r.report), probes};
        const double fid = res.report.final_data_fidelity;
        if (!best || std::abs(fid - target) < std::abs(best->report.final_data_fidelity - target)) best = res;
        return res;
    };
    auto within = [&](double fid) { return std::abs(fid - target) <= config.search_tol * target; };

    LambdaSearchResult at_lo = probe(lo);
    if (within(at_lo.report.final_data_fidelity)) return at_lo;
    if (at_lo.report.final_data_fidelity > target) {
        throw UnreachableTarget(UnreachableTarget::End::Low,
                                "target fidelity " + std::to_string(target) + " is below the fidelity " +
                                    std::to_string(at_lo.report.final_data_fidelity) + " at lambda lo = " +
                                    std::to_string(lo));
    }
    LambdaSearchResult at_hi = probe(hi);
    if (within(at_hi.report.final_data_fidelity)) return at_hi;
    if (at_hi.report.final_data_fidelity < target) {
        throw UnreachableTarget(UnreachableTarget::End::High,
                                "target fidelity " + std::to_string(target) + " is above the fidelity " +
                                    std::to_string(at_hi.report.final_data_fidelity) + " at lambda hi = " +
                                    std::to_string(hi));
    }

    double a = std::log10(lo), b = std::log10(hi);
    while (probes < config.max_probes) {
        const double mid = 0.5 * (a + b);
        LambdaSearchResult r = probe(std::pow(10.0, mid));
        if (within(r.report.final_data_fidelity)) return r;
        // Fidelity grows with lambda.
        if (r.report.final_data_fidelity < target) a = mid; else b = mid;
    }
    best->probes = probes;
    return *best;
}

ClsResult cls_reconstruct(const Observation& y, const ClsOptions& options)
{
    options.solver.validate();

    std::optional<PcaModel> model;
    std::optional<Observation> reduced;
    Index t = 0;
    if (options.use_pca) {
        model = pca_fit(y);
        t = options.components ? *options.components : auto_threshold(y, *model);
        reduced = pca_project(y, *model, t);
    }
    const Observation& work = reduced ? *reduced : y;

    SpectrumImage solution = SpectrumImage::zeros(1, 1, 1);
    SolverReport report;
    if (options.solver.lambda) {
        auto r = fista(work, *options.solver.lambda, options.solver);
        solution = std::move(r.image);
        report = std::move(r.report);
    } else {
        SolverConfig cfg = options.solver;
        if (!cfg.target_residual) {
            if (!options.noise_sigma) {
                throw InvalidArgument("automatic lambda needs a noise sigma or an explicit target residual");
            }
            cfg.target_residual = noise_residual_target(*options.noise_sigma, work);
        }
        auto r = lambda_search(work, cfg);
        solution = std::move(r.image);
        report = std::move(r.report);
    }

    if (model) solution = pca_backproject(solution, *model);
    return ClsResult{std::move(solution), std::move(report), t};
}

} // namespace specinpaint
