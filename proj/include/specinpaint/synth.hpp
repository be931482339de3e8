#pragma once

#include <specinpaint/core.hpp>

#include <cstdint>
#include <limits>

namespace specinpaint {

/// Counter-based 64-bit generator. Output i of stream s under seed k is
/// splitmix64_mix(key(k, s) + (i + 1) * 0x9E3779B97F4A7C15) with
/// key(k, s) = splitmix64_mix(k ^ splitmix64_mix(s)), so any draw can be
/// reproduced in another language from (seed, stream, counter) alone.
class CounterRng
{
public:
    enum class Stream : std::uint64_t
    {
        Mask = 1,
        Noise = 2,
        Spectra = 3,
        Abundances = 4,
    };

    CounterRng(std::uint64_t seed, Stream stream);

    std::uint64_t next();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal by Box-Muller (both outputs used, in order).
    double normal();
    /// Uniform integer in [0, n), rejection sampled.
    std::uint64_t below(std::uint64_t n);

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

/// Linear mixing model X = M A.
struct MixingModel
{
    Index height;
    Index width;
    Eigen::MatrixXd spectra;    ///< B x Nc signatures
    Eigen::MatrixXd abundances; ///< Nc x (H*W) proportion maps, row-major pixels
};

/// Smooth non-negative signatures: a decaying background plus one to three
/// sigmoid edge onsets, each topped by a Gaussian peak. Columns are redrawn
/// until every pair is at least 0.1 rad apart.
Eigen::MatrixXd generate_spectra(Index bands, Index components, std::uint64_t seed);

struct LatticeParams
{
    double period_x = 12.0;
    double period_y = 10.0;
    double blob_sigma = 2.0;
};

/// Proportion maps: Gaussian blobs on a periodic lattice (phase shifted per
/// component) over a low-frequency cosine background, normalized so the
/// components sum to one at every pixel.
Eigen::MatrixXd generate_abundances(Index height, Index width, Index components, const LatticeParams& lattice,
                                    std::uint64_t seed);

SpectrumImage mix(const MixingModel& model);

struct NoisyImage
{
    SpectrumImage image;
    double sigma; ///< standard deviation of the injected noise
};

/// Adds i.i.d. N(0, sigma^2) with sigma^2 = ||X||^2 / (B P 10^(snr_db / 10)).
/// snr_db = +inf leaves the image unchanged.
NoisyImage add_noise(const SpectrumImage& x, double snr_db, std::uint64_t seed);

/// Exactly round(ratio * P) distinct pixels chosen by a seeded shuffle.
SamplingMask make_mask(Index height, Index width, double ratio, std::uint64_t seed);

struct SynthConfig
{
    Index height = 70;
    Index width = 120;
    Index bands = 128;
    Index components = 4;
    double snr_db = 25.0;
    std::uint64_t seed = 0;
    LatticeParams lattice{};
};

struct SynthCube
{
    MixingModel model;
    SpectrumImage clean;
    SpectrumImage noisy;
    double sigma;
};

/// Spectra, abundances, mixing and noise in one call. Carries a nominal
/// energy axis starting at 400 eV in 0.25 eV steps.
SynthCube generate_synthetic(const SynthConfig& config);

} // namespace specinpaint
