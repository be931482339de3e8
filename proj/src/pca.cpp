#include <specinpaint/pca.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>

namespace specinpaint {

namespace {

void fix_signs(Eigen::MatrixXd& components)
{
    for (Index k = 0; k < components.cols(); ++k) {
        Index at = 0;
        components.col(k).cwiseAbs().maxCoeff(&at);
        if (components(at, k) < 0.0) components.col(k) *= -1.0;
    }
}

double median(std::vector<double> v)
{
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

PcaModel pca_fit(const Observation& y)
{
    const Index bands = y.bands();
    const Index n = y.sampled_count();
    if (n < 2) throw InvalidArgument("pca_fit needs at least 2 sampled spectra, got " + std::to_string(n));

    PcaModel model;
    model.mean = y.values().rowwise().mean();
    const Eigen::MatrixXd centered = y.values().colwise() - model.mean;
    const Index k = std::min(bands, n - 1);
    const double dof = double(n - 1);

    if (bands <= n) {
        const Eigen::MatrixXd cov = centered * centered.transpose() / dof;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        // Eigen sorts ascending.
        model.eigenvalues = es.eigenvalues().reverse().head(k);
        model.components = es.eigenvectors().rowwise().reverse().leftCols(k);
    } else {
        const Eigen::MatrixXd gram = centered.transpose() * centered / dof;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        model.eigenvalues = es.eigenvalues().reverse().head(k);
        const Eigen::MatrixXd u = es.eigenvectors().rowwise().reverse().leftCols(k);

        const double tol = 1e-12 * std::max(model.eigenvalues(0), 0.0);
        Eigen::MatrixXd v = centered * u;
        Index good = 0;
        while (good < k && model.eigenvalues(good) > tol) ++good;
        // Modified Gram-Schmidt keeps the lifted vectors orthonormal even for
        // small eigenvalues.
        for (Index j = 0; j < good; ++j) {
            for (Index i = 0; i < j; ++i) v.col(j) -= v.col(i).dot(v.col(j)) * v.col(i);
            v.col(j).normalize();
        }
        if (good < k) {
            // Null directions: complete to an orthonormal basis.
            Eigen::MatrixXd q = Eigen::MatrixXd::Identity(bands, k);
            if (good > 0) {
                Eigen::HouseholderQR<Eigen::MatrixXd> qr(v.leftCols(good));
                q = qr.householderQ() * Eigen::MatrixXd::Identity(bands, k);
            }
            v.rightCols(k - good) = q.rightCols(k - good);
        }
        model.components = v;
    }
    model.eigenvalues = model.eigenvalues.cwiseMax(0.0);
    fix_signs(model.components);
    return model;
}

Observation pca_project(const Observation& y, const PcaModel& model, Index t)
{
    if (y.bands() != model.bands()) throw DimensionMismatch("pca_project: band count differs from the model");
    if (t < 1 || t > model.rank()) {
        throw InvalidArgument("pca_project: t = " + std::to_string(t) + " outside [1, " +
                              std::to_string(model.rank()) + "]");
    }
    Eigen::MatrixXd coords = model.components.leftCols(t).transpose() * (y.values().colwise() - model.mean);
    return Observation(y.mask(), std::move(coords));
}

SpectrumImage pca_backproject(const SpectrumImage& coords, const PcaModel& model)
{
    const Index t = coords.bands();
    if (t > model.rank()) {
        throw DimensionMismatch("pca_backproject: " + std::to_string(t) + " coordinates but the model has rank " +
                                std::to_string(model.rank()));
    }
    CubeMatrix data = model.components.leftCols(t) * coords.data();
    data.colwise() += model.mean;
    return SpectrumImage(coords.height(), coords.width(), std::move(data));
}

double whiteness_score(const Eigen::Ref<const Eigen::MatrixXd>& plane)
{
    const Index h = plane.rows(), w = plane.cols();
    if (h * w < 2) throw InvalidArgument("whiteness_score needs at least 2 pixels");
    if (plane.maxCoeff() == plane.minCoeff()) {
        throw InvalidArgument("whiteness_score: constant plane has no normalized autocorrelation");
    }
    const double mean = plane.mean();

    // Circular autocorrelation = inverse DFT of the power spectrum. A
    // length-1 axis needs no transform (and kissfft does not accept one).
    Eigen::FFT<double> fft;
    Eigen::MatrixXcd spec(h, w);
    std::vector<std::complex<double>> in, out;
    for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) spec(i, j) = plane(i, j) - mean;
    }
    auto rows = [&](bool forward) {
        if (w == 1) return;
        for (Index i = 0; i < h; ++i) {
            in.assign(static_cast<std::size_t>(w), 0.0);
            for (Index j = 0; j < w; ++j) in[static_cast<std::size_t>(j)] = spec(i, j);
            if (forward) fft.fwd(out, in); else fft.inv(out, in);
            for (Index j = 0; j < w; ++j) spec(i, j) = out[static_cast<std::size_t>(j)];
        }
    };
    auto columns = [&](bool forward) {
        if (h == 1) return;
        for (Index j = 0; j < w; ++j) {
            in.assign(spec.col(j).data(), spec.col(j).data() + h);
            if (forward) fft.fwd(out, in); else fft.inv(out, in);
            for (Index i = 0; i < h; ++i) spec(i, j) = out[static_cast<std::size_t>(i)];
        }
    };
    rows(true);
    columns(true);
    spec = spec.cwiseAbs2().cast<std::complex<double>>();
    columns(false);
    rows(false);

    const double r0 = spec(0, 0).real();
    double sum = 0.0;
    for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
            if (i == 0 && j == 0) continue;
            const double r = spec(i, j).real() / r0;
            sum += r * r;
        }
    }
    return std::sqrt(sum);
}

std::vector<double> component_whiteness(const Observation& y, const PcaModel& model)
{
    const auto& mask = y.mask();
    const Eigen::MatrixXd coords = model.components.transpose() * (y.values().colwise() - model.mean);
    const double floor = 1e-10 * (model.rank() > 0 ? model.eigenvalues(0) : 0.0);

    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(model.rank()));
    Eigen::MatrixXd plane(mask.height(), mask.width());
    for (Index k = 0; k < model.rank(); ++k) {
        if (!(model.eigenvalues(k) > floor)) {
            scores.push_back(0.0);
            continue;
        }
        plane.setZero();
        const auto& idx = mask.indices();
        for (std::size_t j = 0; j < idx.size(); ++j) {
            plane(idx[j] / mask.width(), idx[j] % mask.width()) = coords(k, static_cast<Index>(j));
        }
        scores.push_back(plane.maxCoeff() == plane.minCoeff() ? 0.0 : whiteness_score(plane));
    }
    return scores;
}

Index select_threshold(std::span<const double> scores)
{
    const auto n = scores.size();
    if (n < 3) return 1;
    const std::size_t tail_len = (n + 3) / 4;
    std::vector<double> tail(scores.end() - static_cast<std::ptrdiff_t>(tail_len), scores.end());
    const double med = median(tail);
    for (auto& v : tail) v = std::abs(v - med);
    const double mad = 1.4826 * median(tail);
    const double band = med + 3.0 * mad;

    std::size_t t = n;
    while (t > 0 && scores[t - 1] <= band) --t;
    return static_cast<Index>(std::clamp<std::size_t>(t, 1, n));
}

Index auto_threshold(const Observation& y, const PcaModel& model)
{
    const auto scores = component_whiteness(y, model);
    return select_threshold(scores);
}

} // namespace specinpaint
