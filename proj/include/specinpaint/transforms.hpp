#pragma once

#include <specinpaint/core.hpp>

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>

namespace specinpaint {

enum class BasisKind
{
    Dct2,     ///< orthonormal type-II DCT per band plane
    Fourier2, ///< unitary 2D DFT per band plane
};

const char* to_string(BasisKind kind);
BasisKind basis_from_string(const std::string& name);

/// Orthonormal DCT-II matrix: row k holds basis function k sampled at n = 0..N-1.
/// Its transpose is the (type-III) inverse.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dct_matrix(Index n)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c(n, n);
    const Scalar dc = std::sqrt(Scalar(1) / Scalar(n));
    const Scalar ac = std::sqrt(Scalar(2) / Scalar(n));
    for (Index k = 0; k < n; ++k) {
        for (Index i = 0; i < n; ++i) {
            // (2i+1)k mod 4n keeps the cosine argument small.
            const Index m = ((2 * i + 1) * k) % (4 * n);
            c(k, i) = (k == 0 ? dc : ac) * std::cos(std::numbers::pi_v<Scalar> * Scalar(m) / Scalar(2 * n));
        }
    }
    return c;
}

/// Unitary DFT matrix, entries exp(-2 pi i k n / N) / sqrt(N). Symmetric.
template <typename Scalar = double>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic> dft_matrix(Index n)
{
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic> f(n, n);
    const Scalar scale = std::sqrt(Scalar(1) / Scalar(n));
    for (Index k = 0; k < n; ++k) {
        for (Index i = 0; i < n; ++i) {
            const Index m = (k * i) % n;
            const Scalar angle = -Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(m) / Scalar(n);
            f(k, i) = std::polar(scale, angle);
        }
    }
    return f;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
dct2_forward(const Eigen::MatrixBase<Derived>& plane)
{
    using Scalar = typename Derived::Scalar;
    return dct_matrix<Scalar>(plane.rows()) * plane * dct_matrix<Scalar>(plane.cols()).transpose();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
dct2_inverse(const Eigen::MatrixBase<Derived>& coeffs)
{
    using Scalar = typename Derived::Scalar;
    return dct_matrix<Scalar>(coeffs.rows()).transpose() * coeffs * dct_matrix<Scalar>(coeffs.cols());
}

template <typename Derived>
Eigen::Matrix<std::complex<typename Derived::Scalar>, Eigen::Dynamic, Eigen::Dynamic>
fourier2_forward(const Eigen::MatrixBase<Derived>& plane)
{
    using Scalar = typename Derived::Scalar;
    return dft_matrix<Scalar>(plane.rows()) * plane.template cast<std::complex<Scalar>>() *
           dft_matrix<Scalar>(plane.cols());
}

/// Inverse unitary DFT, real part only (exact for conjugate-symmetric spectra).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar::value_type, Eigen::Dynamic, Eigen::Dynamic>
fourier2_inverse(const Eigen::MatrixBase<Derived>& coeffs)
{
    using Scalar = typename Derived::Scalar::value_type;
    return (dft_matrix<Scalar>(coeffs.rows()).conjugate() * coeffs * dft_matrix<Scalar>(coeffs.cols()).conjugate())
        .real();
}

/// Cached band-by-band orthonormal DCT for a fixed H x W plane size. Works on
/// whole band-major cubes (bands x H*W) at once. Stateless after
/// construction, so one plan can be shared between threads.
class BandDct
{
public:
    BandDct(Index height, Index width);

    Index height() const { return height_; }
    Index width() const { return width_; }

    void forward(const CubeMatrix& in, CubeMatrix& out) const;
    void inverse(const CubeMatrix& in, CubeMatrix& out) const;

    CubeMatrix forward(const CubeMatrix& in) const;
    CubeMatrix inverse(const CubeMatrix& in) const;

private:
    Index height_;
    Index width_;
    Eigen::MatrixXd rows_;   // DCT along the vertical axis, H x H
    Eigen::MatrixXd cols_;   // DCT along the horizontal axis, W x W
    Eigen::MatrixXd cols_t_;
    Eigen::MatrixXd rows_t_;
};

using ComplexCubeMatrix = CubeMatrixT<std::complex<double>>;

/// Band-by-band coefficients. For Dct2 the imaginary parts are exactly zero.
struct CoefficientCube
{
    BasisKind kind;
    Index height;
    Index width;
    ComplexCubeMatrix coeffs; ///< bands x (H*W), frequencies in row-major order
};

CoefficientCube band_transform_forward(const SpectrumImage& x, BasisKind kind);
SpectrumImage band_transform_inverse(const CoefficientCube& c);

struct ThresholdResult
{
    SpectrumImage reconstruction;
    double nmse;
    Index kept; ///< number of (complex) coefficients retained
};

/// Keeps the ceil(r * B * P) largest-magnitude coefficients of the whole
/// coefficient cube, zeroes the rest and transforms back. Ties go to the
/// smaller linear index. Fourier coefficients are kept together with their
/// conjugate partner (a pair costs two slots) so the result stays real.
ThresholdResult threshold_reconstruct(const SpectrumImage& x, BasisKind kind, double ratio);

} // namespace specinpaint
