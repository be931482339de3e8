#include <specinpaint/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <charconv>
#include <numbers>

namespace specinpaint {

namespace {

void require_same_shape(const SpectrumImage& a, const SpectrumImage& b)
{
    if (!a.same_shape(b)) {
        throw DimensionMismatch("images differ in shape: " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + "x" + std::to_string(a.bands()) + " vs " +
                                std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                                std::to_string(b.bands()));
    }
}

} // namespace

double nmse(const SpectrumImage& rec, const SpectrumImage& ref)
{
    require_same_shape(rec, ref);
    const double denom = ref.data().squaredNorm();
    if (!(denom > 0.0)) throw InvalidArgument("nmse: reference image is zero");
    return (rec.data() - ref.data()).squaredNorm() / denom;
}

double snr_from_nmse(double nmse_value)
{
    if (nmse_value <= 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(nmse_value);
}

double snr(const SpectrumImage& rec, const SpectrumImage& ref)
{
    return snr_from_nmse(nmse(rec, ref));
}

double asad(const SpectrumImage& rec, const SpectrumImage& ref)
{
    require_same_shape(rec, ref);
    const double n = double(ref.data().size());
    const double floor_rec = 1e-12 * std::sqrt(rec.data().squaredNorm() / n);
    const double floor_ref = 1e-12 * std::sqrt(ref.data().squaredNorm() / n);

    double total = 0.0;
    for (Index p = 0; p < ref.pixels(); ++p) {
        const auto a = rec.spectrum(p);
        const auto b = ref.spectrum(p);
        const double na = a.norm(), nb = b.norm();
        if (!(na > floor_rec) || !(nb > floor_ref)) {
            throw InvalidArgument("asad: zero-norm spectrum at pixel " + std::to_string(p) + " (row " +
                                  std::to_string(p / ref.width()) + ", col " + std::to_string(p % ref.width()) +
                                  ")");
        }
        const double cosine = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
        total += std::acos(cosine);
    }
    return total / double(ref.pixels());
}

double ssim_plane(const Eigen::Ref<const Eigen::MatrixXd>& rec, const Eigen::Ref<const Eigen::MatrixXd>& ref)
{
    const Index h = ref.rows(), w = ref.cols();
    if (rec.rows() != h || rec.cols() != w) throw DimensionMismatch("ssim: plane shapes differ");
    if (h < kSsimWindow || w < kSsimWindow) {
        throw InvalidArgument("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                              " is smaller than the " + std::to_string(kSsimWindow) + "x" +
                              std::to_string(kSsimWindow) + " window");
    }

    double range = ref.maxCoeff() - ref.minCoeff();
    if (range <= 0.0) range = ref.cwiseAbs().maxCoeff();
    if (range <= 0.0) range = 1.0;
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);

    // Summed-area tables with a zero first row/column.
    auto integral = [&](const Eigen::MatrixXd& m) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(h + 1, w + 1);
        for (Index i = 0; i < h; ++i)
            for (Index j = 0; j < w; ++j) s(i + 1, j + 1) = m(i, j) + s(i, j + 1) + s(i + 1, j) - s(i, j);
        return s;
    };
    const Eigen::MatrixXd x = rec, y = ref;
    const Eigen::MatrixXd sx = integral(x), sy = integral(y);
    const Eigen::MatrixXd sxx = integral(x.cwiseProduct(x)), syy = integral(y.cwiseProduct(y));
    const Eigen::MatrixXd sxy = integral(x.cwiseProduct(y));
    auto box = [](const Eigen::MatrixXd& s, Index i, Index j) {
        return s(i + kSsimWindow, j + kSsimWindow) - s(i, j + kSsimWindow) - s(i + kSsimWindow, j) + s(i, j);
    };

    const double n = double(kSsimWindow * kSsimWindow);
    double total = 0.0;
    for (Index i = 0; i + kSsimWindow <= h; ++i) {
        for (Index j = 0; j + kSsimWindow <= w; ++j) {
            const double mx = box(sx, i, j) / n;
            const double my = box(sy, i, j) / n;
            const double vx = std::max(0.0, box(sxx, i, j) / n - mx * mx);
            const double vy = std::max(0.0, box(syy, i, j) / n - my * my);
            const double cxy = box(sxy, i, j) / n - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    return total / double((h - kSsimWindow + 1) * (w - kSsimWindow + 1));
}

double ssim_band_mean(const SpectrumImage& rec, const SpectrumImage& ref)
{
    require_same_shape(rec, ref);
    double total = 0.0;
    for (Index b = 0; b < ref.bands(); ++b) {
        total += ssim_plane(rec.plane(b), ref.plane(b));
    }
    return total / double(ref.bands());
}

MetricsReport evaluate(const SpectrumImage& rec, const SpectrumImage& ref)
{
    const double e = nmse(rec, ref);
    return MetricsReport{e, snr_from_nmse(e), asad(rec, ref), ssim_band_mean(rec, ref)};
}

std::string format_real(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string metrics_csv_header()
{
    return "method,nmse,snr_db,asad_rad,ssim,wall_time_s";
}

std::string metrics_csv_row(const std::string& method, const MetricsReport& report, std::optional<double> wall_time_s)
{
    std::string row = method;
    for (double v : {report.nmse, report.snr_db, report.asad_rad, report.ssim}) {
        row += ',';
        row += format_real(v);
    }
    row += ',';
    if (wall_time_s) row += format_real(*wall_time_s);
    return row;
}

} // namespace specinpaint
