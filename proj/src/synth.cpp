#include <specinpaint/synth.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace specinpaint {

std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, Stream stream)
    : key_(splitmix64_mix(seed ^ splitmix64_mix(static_cast<std::uint64_t>(stream))))
{
}

std::uint64_t CounterRng::next()
{
    ++counter_;
    return splitmix64_mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform()
{
    return double(next() >> 11) * 0x1.0p-53;
}

double CounterRng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t CounterRng::below(std::uint64_t n)
{
    if (n == 0) throw InvalidArgument("CounterRng::below(0)");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % n;
}

namespace {

double sigmoid(double t)
{
    return 1.0 / (1.0 + std::exp(-t));
}

Eigen::VectorXd draw_signature(Index bands, CounterRng& rng)
{
    Eigen::VectorXd s(bands);
    const double amp = rng.uniform(0.5, 1.0);
    const double decay = rng.uniform(0.2, 0.6);
    const int edges = 1 + static_cast<int>(rng.below(3));

    // Onsets on a coarse grid so they stay distinct within a signature.
    std::vector<double> onsets;
    while (static_cast<int>(onsets.size()) < edges) {
        const double e0 = 0.1 + 0.1 * double(rng.below(9));
        if (std::find(onsets.begin(), onsets.end(), e0) == onsets.end()) onsets.push_back(e0);
    }
    struct Edge
    {
        double onset, height, width, peak_height, peak_width;
    };
    std::vector<Edge> params;
    const double min_width = 2.0 / double(bands);
    for (double e0 : onsets) {
        params.push_back(Edge{e0, rng.uniform(0.3, 1.0), min_width + rng.uniform(0.0, 0.02), rng.uniform(0.2, 0.8),
                              1.5 * min_width + rng.uniform(0.0, 0.03)});
    }

    for (Index i = 0; i < bands; ++i) {
        const double e = bands > 1 ? double(i) / double(bands - 1) : 0.0;
        double v = amp * std::exp(-e / decay);
        for (const auto& p : params) {
            const double d = e - p.onset;
            v += p.height * sigmoid(d / p.width) * std::exp(-std::max(d, 0.0) / 0.5);
            v += p.peak_height * std::exp(-0.5 * (d - p.peak_width) * (d - p.peak_width) / (p.peak_width * p.peak_width));
        }
        s(i) = v;
    }
    return s;
}

} // namespace

Eigen::MatrixXd generate_spectra(Index bands, Index components, std::uint64_t seed)
{
    if (components < 1) throw InvalidArgument("generate_spectra: need at least one component");
    if (bands < 8) throw InvalidArgument("generate_spectra: need at least 8 bands");

    CounterRng rng(seed, CounterRng::Stream::Spectra);
    Eigen::MatrixXd m(bands, components);
    for (Index k = 0; k < components; ++k) {
        for (int attempt = 0;; ++attempt) {
            if (attempt == 1000) throw Error("generate_spectra: could not draw distinct signatures");
            const Eigen::VectorXd s = draw_signature(bands, rng);
            bool distinct = true;
            for (Index j = 0; j < k && distinct; ++j) {
                const double c = std::clamp(s.dot(m.col(j)) / (s.norm() * m.col(j).norm()), -1.0, 1.0);
                distinct = std::acos(c) >= 0.1;
            }
            if (distinct) {
                m.col(k) = s;
                break;
            }
        }
    }
    return m;
}

Eigen::MatrixXd generate_abundances(Index height, Index width, Index components, const LatticeParams& lattice,
                                    std::uint64_t seed)
{
    if (components < 1) throw InvalidArgument("generate_abundances: need at least one component");
    if (height < 1 || width < 1) throw InvalidArgument("generate_abundances: empty map");
    if (!(lattice.period_x >= 2.0) || !(lattice.period_y >= 2.0)) {
        throw InvalidArgument("generate_abundances: lattice periods must be >= 2 pixels");
    }
    if (!(lattice.blob_sigma > 0.0)) throw InvalidArgument("generate_abundances: blob_sigma must be positive");

    CounterRng rng(seed, CounterRng::Stream::Abundances);
    const double two_pi = 2.0 * std::numbers::pi;
    const double sigma = lattice.blob_sigma;

    // Periodic sum of 1D Gaussians; the 2D lattice is the outer product.
    auto comb = [&](Index n, double period, double phase) {
        Eigen::VectorXd g(n);
        const double reach = 8.0 * sigma + period;
        for (Index i = 0; i < n; ++i) {
            const double t = double(i) - phase;
            const auto m_lo = static_cast<long long>(std::floor((t - reach) / period));
            const auto m_hi = static_cast<long long>(std::ceil((t + reach) / period));
            double sum = 0.0;
            for (long long m = m_lo; m <= m_hi; ++m) {
                const double d = t - double(m) * period;
                sum += std::exp(-0.5 * d * d / (sigma * sigma));
            }
            g(i) = sum;
        }
        return g;
    };

    Eigen::MatrixXd raw(components, height * width);
    for (Index k = 0; k < components; ++k) {
        const double phase_x = lattice.period_x * (double(k) / double(components) + rng.uniform(0.0, 0.25));
        const double phase_y = lattice.period_y * rng.uniform(0.0, 1.0);
        const double fx = rng.uniform(0.3, 1.2);
        const double fy = rng.uniform(0.3, 1.2);
        const double psi = rng.uniform(0.0, two_pi);
        const double level = rng.uniform(0.4, 0.6);
        const Eigen::VectorXd gx = comb(width, lattice.period_x, phase_x);
        const Eigen::VectorXd gy = comb(height, lattice.period_y, phase_y);
        for (Index r = 0; r < height; ++r) {
            for (Index c = 0; c < width; ++c) {
                const double background =
                    level + 0.3 * std::cos(two_pi * (fy * double(r) / double(height) + fx * double(c) / double(width)) + psi);
                raw(k, r * width + c) = background + gy(r) * gx(c);
            }
        }
    }
    const Eigen::RowVectorXd total = raw.colwise().sum();
    return raw.array().rowwise() / total.array();
}

SpectrumImage mix(const MixingModel& model)
{
    if (model.spectra.cols() != model.abundances.rows()) {
        throw DimensionMismatch("mix: spectra have " + std::to_string(model.spectra.cols()) +
                                " components, abundances " + std::to_string(model.abundances.rows()));
    }
    if (model.abundances.cols() != model.height * model.width) {
        throw DimensionMismatch("mix: abundance maps do not match height * width");
    }
    CubeMatrix data = model.spectra * model.abundances;
    return SpectrumImage(model.height, model.width, std::move(data));
}

NoisyImage add_noise(const SpectrumImage& x, double snr_db, std::uint64_t seed)
{
    if (std::isinf(snr_db) && snr_db > 0) return NoisyImage{x, 0.0};
    const double energy = x.data().squaredNorm();
    if (!(energy > 0.0)) throw InvalidArgument("add_noise: image is zero");
    if (std::isnan(snr_db)) throw InvalidArgument("add_noise: snr_db is NaN");

    const double n = double(x.data().size());
    const double sigma = std::sqrt(energy / (n * std::pow(10.0, snr_db / 10.0)));
    CounterRng rng(seed, CounterRng::Stream::Noise);
    CubeMatrix data = x.data();
    double* v = data.data();
    for (Index i = 0; i < data.size(); ++i) v[i] += sigma * rng.normal();
    return NoisyImage{SpectrumImage(x.height(), x.width(), std::move(data), x.energy_axis()), sigma};
}

SamplingMask make_mask(Index height, Index width, double ratio, std::uint64_t seed)
{
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw InvalidArgument("make_mask: ratio must lie in (0, 1], got " + std::to_string(ratio));
    }
    if (height < 1 || width < 1) throw InvalidArgument("make_mask: empty image");
    const Index pixels = height * width;
    const auto count = static_cast<Index>(std::llround(ratio * double(pixels)));
    if (count == 0) throw InvalidArgument("make_mask: ratio samples zero pixels after rounding");

    // Partial Fisher-Yates: the first `count` slots are a uniform sample.
    std::vector<Index> order(static_cast<std::size_t>(pixels));
    std::iota(order.begin(), order.end(), Index{0});
    CounterRng rng(seed, CounterRng::Stream::Mask);
    for (Index i = 0; i < count; ++i) {
        const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(pixels - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    order.resize(static_cast<std::size_t>(count));
    return SamplingMask::from_indices(height, width, order);
}

SynthCube generate_synthetic(const SynthConfig& config)
{
    MixingModel model{config.height, config.width,
                      generate_spectra(config.bands, config.components, config.seed),
                      generate_abundances(config.height, config.width, config.components, config.lattice, config.seed)};
    std::vector<double> axis(static_cast<std::size_t>(config.bands));
    for (std::size_t i = 0; i < axis.size(); ++i) axis[i] = 400.0 + 0.25 * double(i);

    const SpectrumImage mixed = mix(model);
    SpectrumImage clean(mixed.height(), mixed.width(), mixed.data(), axis);
    NoisyImage noisy = add_noise(clean, config.snr_db, config.seed);
    return SynthCube{std::move(model), std::move(clean), std::move(noisy.image), noisy.sigma};
}

} // namespace specinpaint
