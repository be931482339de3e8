#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace specinpaint {

using Index = Eigen::Index;

/// Band-major cube storage: row b is the b-th band plane, pixels in
/// row-major spatial order. Contiguous planes make band-by-band 2D
/// transforms a matter of mapping one row.
template <typename Scalar>
using CubeMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CubeMatrix = CubeMatrixT<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error
{
    using Error::Error;
};

struct DimensionMismatch : Error
{
    using Error::Error;
};

struct NonFiniteError : Error
{
    using Error::Error;
};

/// Base for everything that goes wrong while reading or writing files.
struct IoError : Error
{
    using Error::Error;
};

struct MalformedHeader : IoError
{
    using IoError::IoError;
};

struct TruncatedPayload : IoError
{
    using IoError::IoError;
};

struct DimensionOverflow : IoError
{
    using IoError::IoError;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A B-band x (H*W)-pixel spectrum-image. Immutable after construction.
template <typename Scalar>
class BasicSpectrumImage
{
public:
    using matrix_t = CubeMatrixT<Scalar>;

    BasicSpectrumImage(Index height, Index width, matrix_t data,
                       std::optional<std::vector<Scalar>> energy_axis = std::nullopt)
        : height_(height), width_(width), data_(std::move(data)), energy_axis_(std::move(energy_axis))
    {
        if (height_ < 1 || width_ < 1 || data_.rows() < 1) {
            throw InvalidArgument("spectrum image needs height, width and bands >= 1");
        }
        if (data_.cols() != height_ * width_) {
            throw DimensionMismatch("spectrum image data has " + std::to_string(data_.cols()) +
                                    " pixel columns, expected " + std::to_string(height_ * width_));
        }
        if (!data_.allFinite()) {
            throw NonFiniteError("spectrum image contains NaN or Inf");
        }
        if (energy_axis_) {
            if (static_cast<Index>(energy_axis_->size()) != data_.rows()) {
                throw DimensionMismatch("energy axis length differs from band count");
            }
            for (std::size_t i = 1; i < energy_axis_->size(); ++i) {
                if (!((*energy_axis_)[i] > (*energy_axis_)[i - 1])) {
                    throw InvalidArgument("energy axis must be strictly increasing");
                }
            }
        }
    }

    static BasicSpectrumImage zeros(Index height, Index width, Index bands)
    {
        return BasicSpectrumImage(height, width, matrix_t::Zero(bands, height * width));
    }

    Index height() const { return height_; }
    Index width() const { return width_; }
    Index bands() const { return data_.rows(); }
    Index pixels() const { return data_.cols(); }

    const matrix_t& data() const { return data_; }
    const std::optional<std::vector<Scalar>>& energy_axis() const { return energy_axis_; }

    /// Read-only H x W view of one band.
    auto plane(Index band) const
    {
        using plane_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        return Eigen::Map<const plane_t>(data_.row(band).data(), height_, width_);
    }

    /// Spectrum at row-major pixel index p.
    auto spectrum(Index p) const { return data_.col(p); }

    bool same_shape(const BasicSpectrumImage& other) const
    {
        return height_ == other.height_ && width_ == other.width_ && bands() == other.bands();
    }

private:
    Index height_;
    Index width_;
    matrix_t data_;
    std::optional<std::vector<Scalar>> energy_axis_;
};

using SpectrumImage = BasicSpectrumImage<double>;

/// Spatial sub-sampling pattern. Encodes the selection operator Phi: the
/// j-th observed column is the j-th sampled pixel in increasing row-major order.
class SamplingMask
{
public:
    SamplingMask(Index height, Index width, std::vector<std::uint8_t> sampled);

    static SamplingMask from_indices(Index height, Index width, const std::vector<Index>& indices);
    static SamplingMask full(Index height, Index width);

    Index height() const { return height_; }
    Index width() const { return width_; }
    Index pixels() const { return height_ * width_; }
    Index sampled_count() const { return static_cast<Index>(indices_.size()); }
    double ratio() const { return double(sampled_count()) / double(pixels()); }

    bool is_sampled(Index p) const { return sampled_[static_cast<std::size_t>(p)] != 0; }
    const std::vector<std::uint8_t>& flags() const { return sampled_; }
    /// Sampled row-major pixel indices, strictly increasing.
    const std::vector<Index>& indices() const { return indices_; }

    bool operator==(const SamplingMask& other) const
    {
        return height_ == other.height_ && width_ == other.width_ && sampled_ == other.sampled_;
    }

private:
    Index height_;
    Index width_;
    std::vector<std::uint8_t> sampled_;
    std::vector<Index> indices_;
};

/// Observed spectra Y (bands x N), column j for mask.indices()[j].
class Observation
{
public:
    Observation(SamplingMask mask, Eigen::MatrixXd values);

    const SamplingMask& mask() const { return mask_; }
    const Eigen::MatrixXd& values() const { return values_; }
    Index bands() const { return values_.rows(); }
    Index sampled_count() const { return values_.cols(); }

private:
    SamplingMask mask_;
    Eigen::MatrixXd values_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Y = X * Phi (noise-free).
Observation apply_mask(const SpectrumImage& x, const SamplingMask& mask);

/// Zero-filled adjoint Y * Phi^T.
SpectrumImage embed(const Observation& y);

// ---------------------------------------------------------------------------
// File IO
//
// Both formats start with a one-line JSON header followed by '\n' and a raw
// little-endian payload:
//   {"magic":"SSI1","height":H,"width":W,"bands":B,"dtype":"f32le","order":"band-major"}
// Masks use dtype "u8" with one 0/1 byte per pixel and bands = 1.
// ---------------------------------------------------------------------------

SpectrumImage load_cube(const std::filesystem::path& path);
void store_cube(const SpectrumImage& x, const std::filesystem::path& path);

SamplingMask load_mask(const std::filesystem::path& path);
void store_mask(const SamplingMask& mask, const std::filesystem::path& path);

/// Appends `row` to a CSV file, writing `header` first if the file is new or empty.
void append_csv_row(const std::filesystem::path& path, const std::string& header, const std::string& row);

} // namespace specinpaint
