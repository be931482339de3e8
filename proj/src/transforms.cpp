#include <specinpaint/transforms.hpp>
#include <specinpaint/metrics.hpp>

#include <algorithm>
#include <numeric>

namespace specinpaint {

const char* to_string(BasisKind kind)
{
    switch (kind) {
    case BasisKind::Dct2: return "dct";
    case BasisKind::Fourier2: return "fourier";
    }
    return "?";
}

BasisKind basis_from_string(const std::string& name)
{
    if (name == "dct") return BasisKind::Dct2;
    if (name == "fourier") return BasisKind::Fourier2;
    throw InvalidArgument("unknown basis '" + name + "' (expected dct or fourier)");
}

namespace {

/// out_b = left * in_b * right for every band plane b of a band-major cube.
template <typename Scalar, typename Left, typename Right>
void separable_apply(const CubeMatrixT<Scalar>& in, Index height, Index width, const Left& left, const Right& right,
                     CubeMatrixT<Scalar>& out)
{
    using plane_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Index bands = in.rows();
    // Stacked planes form a contiguous (B*H) x W row-major matrix.
    Eigen::Map<const plane_t> stacked(in.data(), bands * height, width);
    const plane_t horizontal = stacked * right;
    out.resize(bands, height * width);
    for (Index b = 0; b < bands; ++b) {
        Eigen::Map<plane_t> dst(out.row(b).data(), height, width);
        dst.noalias() = left * horizontal.middleRows(b * height, height);
    }
}

void check_shape(const CubeMatrix& in, Index height, Index width)
{
    if (in.cols() != height * width) {
        throw DimensionMismatch("cube has " + std::to_string(in.cols()) + " pixels, transform plan expects " +
                                std::to_string(height * width));
    }
}

} // namespace

BandDct::BandDct(Index height, Index width)
    : height_(height), width_(width)
{
    if (height < 1 || width < 1) throw InvalidArgument("transform plane must be at least 1x1");
    rows_ = dct_matrix<double>(height);
    cols_ = dct_matrix<double>(width);
    rows_t_ = rows_.transpose();
    cols_t_ = cols_.transpose();
}

void BandDct::forward(const CubeMatrix& in, CubeMatrix& out) const
{
    check_shape(in, height_, width_);
    separable_apply(in, height_, width_, rows_, cols_t_, out);
}

void BandDct::inverse(const CubeMatrix& in, CubeMatrix& out) const
{
    check_shape(in, height_, width_);
    separable_apply(in, height_, width_, rows_t_, cols_, out);
}

CubeMatrix BandDct::forward(const CubeMatrix& in) const
{
    CubeMatrix out;
    forward(in, out);
    return out;
}

CubeMatrix BandDct::inverse(const CubeMatrix& in) const
{
    CubeMatrix out;
    inverse(in, out);
    return out;
}

CoefficientCube band_transform_forward(const SpectrumImage& x, BasisKind kind)
{
    const Index h = x.height(), w = x.width();
    CoefficientCube c{kind, h, w, {}};
    if (kind == BasisKind::Dct2) {
        c.coeffs = BandDct(h, w).forward(x.data()).cast<std::complex<double>>();
    } else {
        const ComplexCubeMatrix in = x.data().cast<std::complex<double>>();
        separable_apply(in, h, w, dft_matrix<double>(h), dft_matrix<double>(w), c.coeffs);
    }
    return c;
}

SpectrumImage band_transform_inverse(const CoefficientCube& c)
{
    const Index h = c.height, w = c.width;
    if (c.coeffs.cols() != h * w) throw DimensionMismatch("coefficient cube shape disagrees with its plane size");
    if (c.kind == BasisKind::Dct2) {
        const CubeMatrix re = c.coeffs.real();
        return SpectrumImage(h, w, BandDct(h, w).inverse(re));
    }
    ComplexCubeMatrix out;
    const Eigen::MatrixXcd fh = dft_matrix<double>(h).conjugate();
    const Eigen::MatrixXcd fw = dft_matrix<double>(w).conjugate();
    separable_apply(c.coeffs, h, w, fh, fw, out);
    return SpectrumImage(h, w, out.real());
}

ThresholdResult threshold_reconstruct(const SpectrumImage& x, BasisKind kind, double ratio)
{
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw InvalidArgument("threshold ratio must lie in (0, 1], got " + std::to_string(ratio));
    }
    CoefficientCube c = band_transform_forward(x, kind);
    const Index h = c.height, w = c.width, pixels = h * w;
    const Index total = c.coeffs.size();
    const auto budget = std::min<Index>(total, static_cast<Index>(std::ceil(ratio * double(total) * (1.0 - 1e-12))));

    // A "unit" is a coefficient, or for Fourier a conjugate pair represented
    // by its smaller linear index.
    auto partner = [&](Index i) {
        const Index b = i / pixels, p = i % pixels;
        const Index k1 = p / w, k2 = p % w;
        return b * pixels + ((h - k1) % h) * w + (w - k2) % w;
    };
    std::vector<Index> units;
    units.reserve(static_cast<std::size_t>(total));
    for (Index i = 0; i < total; ++i) {
        if (kind == BasisKind::Dct2 || i <= partner(i)) units.push_back(i);
    }
    const std::complex<double>* coeff = c.coeffs.data();
    std::sort(units.begin(), units.end(), [&](Index a, Index b) {
        const double ma = std::abs(coeff[a]), mb = std::abs(coeff[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    });

    std::vector<std::uint8_t> keep(static_cast<std::size_t>(total), 0);
    Index kept = 0;
    for (Index u : units) {
        const Index mate = kind == BasisKind::Dct2 ? u : partner(u);
        const Index cost = mate == u ? 1 : 2;
        if (kept + cost > budget) break;
        keep[static_cast<std::size_t>(u)] = 1;
        keep[static_cast<std::size_t>(mate)] = 1;
        kept += cost;
    }
    std::complex<double>* mut = c.coeffs.data();
    for (Index i = 0; i < total; ++i) {
        if (!keep[static_cast<std::size_t>(i)]) mut[i] = 0.0;
    }

    SpectrumImage rec = band_transform_inverse(c);
    const double err = nmse(rec, x);
    return ThresholdResult{std::move(rec), err, kept};
}

} // namespace specinpaint
