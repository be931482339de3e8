#include <doctest.h>

#include "oracles.hpp"

#include <specinpaint/metrics.hpp>

#include <numbers>

using namespace specinpaint;

TEST_CASE("nmse and snr")
{
    std::mt19937_64 gen(1);
    const auto ref = oracle::random_image(8, 9, 4, gen);

    SUBCASE("exact reconstruction")
    {
        CHECK(nmse(ref, ref) == 0.0);
        CHECK(std::isinf(snr(ref, ref)));
        CHECK(snr(ref, ref) > 0);
    }

    SUBCASE("orthogonal perturbation at 1% energy")
    {
        CubeMatrix e = oracle::random_matrix(4, 72, gen);
        const Eigen::Map<const Eigen::VectorXd> r(ref.data().data(), ref.data().size());
        Eigen::Map<Eigen::VectorXd> ev(e.data(), e.size());
        ev -= (ev.dot(r) / r.squaredNorm()) * r;
        ev *= 0.1 * r.norm() / ev.norm();
        const SpectrumImage rec(8, 9, CubeMatrix(ref.data() + e));
        CHECK(nmse(rec, ref) == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(snr(rec, ref) == doctest::Approx(20.0).epsilon(1e-12));
    }

    SUBCASE("errors")
    {
        CHECK_THROWS_AS(nmse(oracle::random_image(8, 9, 3, gen), ref), DimensionMismatch);
        const auto zero = SpectrumImage::zeros(8, 9, 4);
        CHECK_THROWS_AS(nmse(ref, zero), InvalidArgument);
    }
}

TEST_CASE("asad")
{
    SUBCASE("orthogonal spectra give pi/2")
    {
        CubeMatrix a(2, 1), b(2, 1);
        a << 1, 0;
        b << 0, 3;
        CHECK(asad(SpectrumImage(1, 1, a), SpectrumImage(1, 1, b)) == doctest::Approx(std::numbers::pi / 2));
    }

    std::mt19937_64 gen(2);
    const auto x = oracle::random_image(5, 6, 7, gen);
    const auto z = oracle::random_image(5, 6, 7, gen);

    SUBCASE("identical images give zero")
    {
        CHECK(asad(x, x) <= 1e-7);
    }

    SUBCASE("invariant to per-pixel positive scaling and symmetric")
    {
        CubeMatrix scaled = x.data();
        for (Index p = 0; p < 30; ++p) scaled.col(p) *= 0.5 + p;
        CHECK(asad(SpectrumImage(5, 6, scaled), z) == doctest::Approx(asad(x, z)).epsilon(1e-12));
        CHECK(asad(x, z) == doctest::Approx(asad(z, x)).epsilon(1e-14));
    }

    SUBCASE("matches an explicit pixel loop")
    {
        double sum = 0.0;
        for (Index p = 0; p < 30; ++p) {
            double dot = 0, na = 0, nb = 0;
            for (Index b = 0; b < 7; ++b) {
                dot += x.data()(b, p) * z.data()(b, p);
                na += x.data()(b, p) * x.data()(b, p);
                nb += z.data()(b, p) * z.data()(b, p);
            }
            sum += std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
        }
        CHECK(asad(x, z) == doctest::Approx(sum / 30.0).epsilon(1e-12));
    }

    SUBCASE("a zero spectrum is reported")
    {
        CubeMatrix d = x.data();
        d.col(17).setZero();
        try {
            asad(SpectrumImage(5, 6, d), x);
            FAIL("expected InvalidArgument");
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find("17") != std::string::npos);
        }
    }
}

TEST_CASE("ssim")
{
    std::mt19937_64 gen(3);

    SUBCASE("identical planes score one")
    {
        const Eigen::MatrixXd p = oracle::random_matrix(12, 15, gen);
        CHECK(ssim_plane(p, p) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("flat planes have a closed form")
    {
        const double c = 2.0, d = 0.5;
        const Eigen::MatrixXd ref = Eigen::MatrixXd::Constant(10, 10, c);
        const Eigen::MatrixXd rec = Eigen::MatrixXd::Constant(10, 10, c + d);
        const double c1 = (0.01 * c) * (0.01 * c);
        const double expect = (2.0 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1);
        CHECK(ssim_plane(rec, ref) == doctest::Approx(expect).epsilon(1e-12));
    }

    SUBCASE("single window matches the direct formula")
    {
        const Eigen::MatrixXd ref = oracle::random_matrix(8, 8, gen);
        const Eigen::MatrixXd rec = ref + 0.3 * oracle::random_matrix(8, 8, gen);
        const double mx = rec.mean(), my = ref.mean();
        const double vx = (rec.array() - mx).square().mean();
        const double vy = (ref.array() - my).square().mean();
        const double cxy = ((rec.array() - mx) * (ref.array() - my)).mean();
        const double lr = ref.maxCoeff() - ref.minCoeff();
        const double c1 = std::pow(0.01 * lr, 2), c2 = std::pow(0.03 * lr, 2);
        const double expect = (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        CHECK(ssim_plane(rec, ref) == doctest::Approx(expect).epsilon(1e-12));
    }

    SUBCASE("band mean")
    {
        const auto a = oracle::random_image(9, 10, 3, gen);
        const auto b = oracle::random_image(9, 10, 3, gen);
        double mean = 0.0;
        for (Index k = 0; k < 3; ++k) mean += ssim_plane(a.plane(k), b.plane(k)) / 3.0;
        CHECK(ssim_band_mean(a, b) == doctest::Approx(mean).epsilon(1e-14));
        CHECK(ssim_plane(a.plane(0), b.plane(0)) < 0.5);
    }

    SUBCASE("planes smaller than the window")
    {
        const Eigen::MatrixXd p = Eigen::MatrixXd::Ones(7, 20);
        CHECK_THROWS_AS(ssim_plane(p, p), InvalidArgument);
    }
}

TEST_CASE("evaluate and csv rows")
{
    std::mt19937_64 gen(4);
    const auto ref = oracle::random_image(8, 8, 2, gen);
    const SpectrumImage rec(8, 8, CubeMatrix(ref.data() * 1.1));
    const auto r = evaluate(rec, ref);
    CHECK(r.nmse == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(r.snr_db == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(r.asad_rad <= 1e-7);

    CHECK(metrics_csv_header() == "method,nmse,snr_db,asad_rad,ssim,wall_time_s");
    const auto row = metrics_csv_row("cls", MetricsReport{0.5, 3.0, 0.25, 1.0});
    CHECK(row == "cls,0.5,3,0.25,1,");
    CHECK(metrics_csv_row("nn", MetricsReport{0.5, 3.0, 0.25, 1.0}, 1.5) == "nn,0.5,3,0.25,1,1.5");
    CHECK(std::stod(format_real(0.1)) == 0.1);
    CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
}
