#pragma once

#include <specinpaint/core.hpp>

#include <limits>
#include <optional>
#include <string>

namespace specinpaint {

/// ||rec - ref||_F^2 / ||ref||_F^2.
double nmse(const SpectrumImage& rec, const SpectrumImage& ref);

/// -10 log10(nmse). +inf when the reconstruction is exact.
double snr_from_nmse(double nmse_value);
double snr(const SpectrumImage& rec, const SpectrumImage& ref);

/// Mean per-pixel spectral angle in radians. Throws InvalidArgument naming
/// the pixel when a spectrum is (numerically) zero in either image.
double asad(const SpectrumImage& rec, const SpectrumImage& ref);

constexpr Index kSsimWindow = 8;

/// Single-band SSIM with an 8x8 uniform window, stride 1, C1 = (0.01 Lr)^2,
/// C2 = (0.03 Lr)^2 where Lr is the dynamic range of the reference plane.
/// A flat reference falls back to Lr = max |ref|, then to 1.
double ssim_plane(const Eigen::Ref<const Eigen::MatrixXd>& rec, const Eigen::Ref<const Eigen::MatrixXd>& ref);

/// Arithmetic mean of ssim_plane over all bands.
double ssim_band_mean(const SpectrumImage& rec, const SpectrumImage& ref);

struct MetricsReport
{
    double nmse;
    double snr_db;
    double asad_rad;
    double ssim;
};

MetricsReport evaluate(const SpectrumImage& rec, const SpectrumImage& ref);

/// `method,nmse,snr_db,asad_rad,ssim,wall_time_s`
std::string metrics_csv_header();

/// Values round-trip exactly through format_real. An absent wall time leaves the field empty.
std::string metrics_csv_row(const std::string& method, const MetricsReport& report,
                            std::optional<double> wall_time_s = std::nullopt);

/// Shortest decimal that parses back to the same double; used by every CSV writer.
std::string format_real(double v);

} // namespace specinpaint
