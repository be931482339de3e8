#include <doctest.h>

#include "oracles.hpp"

#include <specinpaint/synth.hpp>

#include <Eigen/SVD>

#include <numbers>

using namespace specinpaint;

TEST_CASE("counter rng")
{
    // First output of the reference SplitMix64 generator seeded with 0.
    CHECK(splitmix64_mix(0x9E3779B97F4A7C15ULL) == 0xE220A8397B1DCDAFULL);

    CounterRng a(7, CounterRng::Stream::Noise), b(7, CounterRng::Stream::Noise), c(7, CounterRng::Stream::Mask);
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next();
        CHECK(va == b.next());
        CHECK(va != c.next());
    }
    CHECK(a.counter() == 100);

    CounterRng u(1, CounterRng::Stream::Noise);
    double sum = 0, sum_sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = u.normal();
        sum += z;
        sum_sq += z * z;
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(sum_sq / n - 1.0) < 5.0 * std::sqrt(2.0 / n));

    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK((v >= 0.0 && v < 1.0));
        CHECK(u.below(7) < 7);
    }
    CHECK_THROWS_AS(u.below(0), InvalidArgument);
}

TEST_CASE("generated spectra")
{
    const auto m = generate_spectra(128, 4, 0);
    CHECK(m.rows() == 128);
    CHECK(m.cols() == 4);
    CHECK(m == generate_spectra(128, 4, 0));
    CHECK(m != generate_spectra(128, 4, 1));
    CHECK(m.minCoeff() >= 0.0);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    CHECK(svd.singularValues()(3) > 1e-6 * svd.singularValues()(0));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = generate_spectra(32, 6, seed);
        for (Index i = 0; i < 6; ++i)
            for (Index j = i + 1; j < 6; ++j) {
                const double c = s.col(i).dot(s.col(j)) / (s.col(i).norm() * s.col(j).norm());
                CHECK(std::acos(std::clamp(c, -1.0, 1.0)) >= 0.1);
            }
    }
    CHECK_THROWS_AS(generate_spectra(7, 2, 0), InvalidArgument);
    CHECK_THROWS_AS(generate_spectra(16, 0, 0), InvalidArgument);
}

TEST_CASE("generated abundances")
{
    const LatticeParams lattice;
    const auto a = generate_abundances(70, 120, 4, lattice, 3);
    CHECK(a.rows() == 4);
    CHECK(a.cols() == 8400);
    CHECK(a.minCoeff() > 0.0);
    CHECK((a.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(a == generate_abundances(70, 120, 4, lattice, 3));

    SUBCASE("wide blobs flatten every map toward 1 / Nc")
    {
        const auto flat = generate_abundances(20, 24, 4, LatticeParams{12.0, 10.0, 1000.0}, 3);
        CHECK((flat.array() - 0.25).abs().maxCoeff() <= 1e-3);
    }

    SUBCASE("maps repeat at the lattice period")
    {
        // Circular autocorrelation of each centered map, compared at one
        // period and at half a period along each axis.
        for (Index k = 0; k < 4; ++k) {
            Eigen::MatrixXd map(70, 120);
            for (Index p = 0; p < 8400; ++p) map(p / 120, p % 120) = a(k, p);
            map.array() -= map.mean();
            auto corr = [&](Index dy, Index dx) {
                double s = 0;
                for (Index i = 0; i < 70; ++i)
                    for (Index j = 0; j < 120; ++j) s += map(i, j) * map((i + dy) % 70, (j + dx) % 120);
                return s;
            };
            CHECK(corr(0, 12) > corr(0, 6));
            CHECK(corr(10, 0) > corr(5, 0));
        }
    }

    SUBCASE("invalid parameters")
    {
        CHECK_THROWS_AS(generate_abundances(10, 10, 0, lattice, 0), InvalidArgument);
        CHECK_THROWS_AS(generate_abundances(10, 10, 2, LatticeParams{1.0, 10.0, 2.0}, 0), InvalidArgument);
        CHECK_THROWS_AS(generate_abundances(10, 10, 2, LatticeParams{12.0, 10.0, 0.0}, 0), InvalidArgument);
    }
}

TEST_CASE("mixing")
{
    std::mt19937_64 gen(5);
    const MixingModel m{3, 4, oracle::random_matrix(6, 2, gen), oracle::random_matrix(2, 12, gen)};
    const auto x = mix(m);
    for (Index b = 0; b < 6; ++b)
        for (Index p = 0; p < 12; ++p) {
            double s = 0;
            for (Index c = 0; c < 2; ++c) s += m.spectra(b, c) * m.abundances(c, p);
            CHECK(x.data()(b, p) == doctest::Approx(s).epsilon(1e-14));
        }
    CHECK_THROWS_AS(mix(MixingModel{3, 4, m.spectra, oracle::random_matrix(3, 12, gen)}), DimensionMismatch);
    CHECK_THROWS_AS(mix(MixingModel{3, 5, m.spectra, m.abundances}), DimensionMismatch);
}

TEST_CASE("additive noise")
{
    const MixingModel m{64, 64, generate_spectra(32, 3, 2), generate_abundances(64, 64, 3, LatticeParams{}, 2)};
    const auto x = mix(m);

    SUBCASE("achieved SNR is within 0.1 dB")
    {
        for (double snr_db : {10.0, 25.0, 40.0}) {
            const auto n = add_noise(x, snr_db, 11);
            const double achieved = 10.0 * std::log10(x.data().squaredNorm() / (n.image.data() - x.data()).squaredNorm());
            CHECK(std::abs(achieved - snr_db) <= 0.1);
            CHECK(n.sigma == doctest::Approx(std::sqrt(x.data().squaredNorm() / (32.0 * 4096.0 * std::pow(10.0, snr_db / 10)))));
        }
    }

    SUBCASE("deterministic per seed")
    {
        CHECK(add_noise(x, 20.0, 4).image.data() == add_noise(x, 20.0, 4).image.data());
        CHECK(add_noise(x, 20.0, 4).image.data() != add_noise(x, 20.0, 5).image.data());
    }

    SUBCASE("per-band energy is chi-square with P degrees of freedom")
    {
        const auto n = add_noise(x, 20.0, 8);
        const CubeMatrix e = (n.image.data() - x.data()) / n.sigma;
        const double p = 4096.0;
        for (Index b = 0; b < 32; ++b) {
            CHECK(std::abs(e.row(b).squaredNorm() - p) <= 5.0 * std::sqrt(2.0 * p));
            CHECK(std::abs(e.row(b).mean()) <= 5.0 / std::sqrt(p));
        }
    }

    SUBCASE("infinite SNR is the identity")
    {
        const auto n = add_noise(x, std::numeric_limits<double>::infinity(), 1);
        CHECK(n.image.data() == x.data());
        CHECK(n.sigma == 0.0);
    }

    SUBCASE("errors")
    {
        CHECK_THROWS_AS(add_noise(SpectrumImage::zeros(2, 2, 2), 10.0, 0), InvalidArgument);
        CHECK_THROWS_AS(add_noise(x, std::numeric_limits<double>::quiet_NaN(), 0), InvalidArgument);
    }
}

TEST_CASE("sampling masks")
{
    const auto m = make_mask(70, 120, 0.2, 0);
    CHECK(m.sampled_count() == 1680);
    CHECK(m == make_mask(70, 120, 0.2, 0));
    CHECK_FALSE(m == make_mask(70, 120, 0.2, 1));
    CHECK(make_mask(5, 6, 1.0, 3).sampled_count() == 30);

    SUBCASE("every pixel is equally likely")
    {
        const int trials = 10000;
        std::vector<int> hits(100, 0);
        for (int s = 0; s < trials; ++s) {
            const auto mask = make_mask(10, 10, 0.3, static_cast<std::uint64_t>(s));
            for (Index p : mask.indices()) ++hits[static_cast<std::size_t>(p)];
        }
        const double band = 5.0 * std::sqrt(0.3 * 0.7 / trials);
        for (int h : hits) CHECK(std::abs(double(h) / trials - 0.3) <= band);
    }

    SUBCASE("invalid ratios")
    {
        CHECK_THROWS_AS(make_mask(10, 10, 0.0, 0), InvalidArgument);
        CHECK_THROWS_AS(make_mask(10, 10, 1.5, 0), InvalidArgument);
        CHECK_THROWS_AS(make_mask(10, 10, 0.004, 0), InvalidArgument);
        CHECK_THROWS_AS(make_mask(10, 10, std::numeric_limits<double>::quiet_NaN(), 0), InvalidArgument);
    }
}

TEST_CASE("generate_synthetic")
{
    const auto s = generate_synthetic(SynthConfig{20, 24, 16, 3, 30.0, 9, {}});
    CHECK(s.clean.height() == 20);
    CHECK(s.clean.bands() == 16);
    REQUIRE(s.clean.energy_axis());
    CHECK(s.clean.energy_axis()->front() == 400.0);
    CHECK(s.clean.energy_axis()->at(1) == 400.25);
    CHECK(s.clean.data() == mix(s.model).data());
    CHECK(s.sigma > 0.0);
    const auto again = generate_synthetic(SynthConfig{20, 24, 16, 3, 30.0, 9, {}});
    CHECK(again.noisy.data() == s.noisy.data());
}
