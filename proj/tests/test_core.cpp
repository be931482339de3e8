#include <doctest.h>

#include "oracles.hpp"

#include <specinpaint/core.hpp>
#include <specinpaint/synth.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace specinpaint;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name)
{
    return fs::temp_directory_path() / ("specinpaint_test_core_" + name);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

} // namespace

TEST_CASE("spectrum image invariants")
{
    CHECK_THROWS_AS(SpectrumImage(0, 2, CubeMatrix::Zero(1, 0)), InvalidArgument);
    CHECK_THROWS_AS(SpectrumImage(2, 2, CubeMatrix::Zero(1, 3)), DimensionMismatch);
    CubeMatrix bad = CubeMatrix::Zero(1, 4);
    bad(0, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(SpectrumImage(2, 2, bad), NonFiniteError);
    CHECK_THROWS_AS(SpectrumImage(1, 1, CubeMatrix::Zero(2, 1), std::vector<double>{1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(SpectrumImage(1, 1, CubeMatrix::Zero(2, 1), std::vector<double>{1.0}), DimensionMismatch);

    CubeMatrix d(2, 6);
    d << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    const SpectrumImage x(2, 3, d);
    CHECK(x.plane(1)(1, 0) == 10);
    CHECK(x.spectrum(4)(1) == 11);
}

TEST_CASE("sampling mask ordering and operator")
{
    const auto m = SamplingMask::from_indices(3, 3, {7, 0, 4});
    CHECK(m.sampled_count() == 3);
    CHECK(m.indices() == std::vector<Index>{0, 4, 7});
    CHECK(m.ratio() == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(SamplingMask::from_indices(2, 2, {1, 1}), InvalidArgument);
    CHECK_THROWS_AS(SamplingMask::from_indices(2, 2, {4}), InvalidArgument);
    CHECK_THROWS_AS(SamplingMask(2, 2, {0, 0, 0, 0}), InvalidArgument);

    // Phi^T Phi = I_N: build Phi explicitly from the ordering.
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(m.pixels(), m.sampled_count());
    for (std::size_t j = 0; j < m.indices().size(); ++j) phi(m.indices()[j], static_cast<Index>(j)) = 1.0;
    CHECK((phi.transpose() * phi).isIdentity());
    CHECK((phi.colwise().sum().array() == 1.0).all());
}

TEST_CASE("apply_mask selects sampled columns")
{
    CubeMatrix d(1, 4);
    d << 1, 2, 3, 4;
    const SpectrumImage x(2, 2, d);
    const auto y = apply_mask(x, SamplingMask::from_indices(2, 2, {0, 3}));
    CHECK(y.values().rows() == 1);
    CHECK(y.values()(0, 0) == 1);
    CHECK(y.values()(0, 1) == 4);

    const auto full = apply_mask(x, SamplingMask::full(2, 2));
    CHECK(full.values() == Eigen::MatrixXd(d));

    CHECK_THROWS_AS(apply_mask(x, SamplingMask::full(2, 3)), DimensionMismatch);
}

TEST_CASE("embed is the zero-filled adjoint")
{
    std::mt19937_64 gen(3);
    const auto x = oracle::random_image(4, 5, 3, gen);

    SUBCASE("full sampling round-trips exactly")
    {
        CHECK(embed(apply_mask(x, SamplingMask::full(4, 5))).data() == x.data());
    }
    SUBCASE("zero observation gives zero image")
    {
        const auto m = oracle::random_mask(4, 5, 7, gen);
        const Observation y(m, Eigen::MatrixXd::Zero(3, 7));
        CHECK(embed(y).data().isZero(0.0));
    }
    SUBCASE("single sampled pixel")
    {
        const auto m = SamplingMask::from_indices(4, 5, {13});
        const Eigen::Vector3d s(1.5, -2.0, 0.25);
        const auto img = embed(Observation(m, s));
        for (Index p = 0; p < 20; ++p) {
            if (p == 13) CHECK(img.spectrum(p) == s);
            else CHECK(img.spectrum(p).isZero(0.0));
        }
    }
    SUBCASE("random 20% mask: exactly N nonzero columns")
    {
        const auto s = generate_synthetic(SynthConfig{20, 30, 16, 3, 30.0, 5, {}});
        const auto m = make_mask(20, 30, 0.2, 5);
        const auto img = embed(apply_mask(s.noisy, m));
        Index nonzero = 0;
        for (Index p = 0; p < img.pixels(); ++p) nonzero += img.spectrum(p).isZero(0.0) ? 0 : 1;
        CHECK(nonzero == m.sampled_count());
        CHECK(nonzero == 120);
    }
}

TEST_CASE("selection properties hold on random data")
{
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = oracle::random_image(5, 6, 4, gen);
        const auto m = oracle::random_mask(5, 6, 1 + trial % 30, gen);
        const auto y = apply_mask(x, m);
        CHECK(y.values().norm() <= x.data().norm());
        const auto again = apply_mask(embed(y), m);
        CHECK(again.values() == y.values());
    }
}

TEST_CASE("cube file round trip")
{
    std::mt19937_64 gen(1);
    CubeMatrix d = oracle::random_matrix(5, 12, gen).cast<float>().cast<double>();
    const SpectrumImage x(3, 4, d, std::vector<double>{400.0, 400.25, 400.5, 401.0, 410.125});
    const auto p = temp_path("cube.ssi");
    store_cube(x, p);

    const auto bytes = slurp(p);
    CHECK(bytes.rfind(R"({"magic":"SSI1","height":3,"width":4,"bands":5,"dtype":"f32le","order":"band-major")", 0) == 0);

    const auto back = load_cube(p);
    CHECK(back.height() == 3);
    CHECK(back.width() == 4);
    CHECK(back.bands() == 5);
    CHECK(back.data() == x.data());
    REQUIRE(back.energy_axis());
    CHECK(*back.energy_axis() == *x.energy_axis());

    const auto p2 = temp_path("cube2.ssi");
    store_cube(back, p2);
    CHECK(slurp(p2) == bytes);
}

TEST_CASE("cube file errors are distinct")
{
    const auto p = temp_path("bad.ssi");
    const std::string header = R"({"magic":"SSI1","height":2,"width":2,"bands":2,"dtype":"f32le","order":"band-major"})";

    spit(p, header + "\n" + std::string(7 * 4, '\0'));
    CHECK_THROWS_AS(load_cube(p), TruncatedPayload);

    spit(p, header + "\n" + std::string(9 * 4, '\0'));
    CHECK_THROWS_AS(load_cube(p), IoError);

    spit(p, R"({"magic":"SSI1","height":2,)" "\n");
    CHECK_THROWS_AS(load_cube(p), MalformedHeader);

    spit(p, R"({"magic":"XXXX","height":2,"width":2,"bands":2,"dtype":"f32le","order":"band-major"})" "\n");
    CHECK_THROWS_AS(load_cube(p), MalformedHeader);

    spit(p, R"({"magic":"SSI1","height":2,"width":2,"bands":2,"dtype":"u8","order":"band-major"})" "\n");
    CHECK_THROWS_AS(load_cube(p), MalformedHeader);

    spit(p, R"({"magic":"SSI1","height":0,"width":2,"bands":2,"dtype":"f32le","order":"band-major"})" "\n");
    CHECK_THROWS_AS(load_cube(p), MalformedHeader);

    spit(p, R"({"magic":"SSI1","height":4294967296,"width":4294967296,"bands":4,"dtype":"f32le","order":"band-major"})"
            "\n");
    CHECK_THROWS_AS(load_cube(p), DimensionOverflow);

    spit(p, header);
    CHECK_THROWS_AS(load_cube(p), MalformedHeader);

    CHECK_THROWS_AS(load_cube(temp_path("does_not_exist.ssi")), IoError);
}

TEST_CASE("non-finite payload is rejected")
{
    const auto p = temp_path("nan.ssi");
    const float vals[2] = {1.0f, std::numeric_limits<float>::infinity()};
    spit(p, std::string(R"({"magic":"SSI1","height":1,"width":2,"bands":1,"dtype":"f32le","order":"band-major"})") +
                "\n" + std::string(reinterpret_cast<const char*>(vals), sizeof vals));
    CHECK_THROWS_AS(load_cube(p), NonFiniteError);
}

TEST_CASE("mask file round trip")
{
    const auto m = make_mask(7, 9, 0.3, 42);
    const auto p = temp_path("mask.ssm");
    store_mask(m, p);
    const auto bytes = slurp(p);
    CHECK(bytes.rfind(R"({"magic":"SSI1","height":7,"width":9,"bands":1,"dtype":"u8","order":"band-major"})" "\n", 0) == 0);
    const auto back = load_mask(p);
    CHECK(back == m);
    CHECK(back.sampled_count() == m.sampled_count());
    CHECK(back.indices() == m.indices());

    const auto p2 = temp_path("mask2.ssm");
    store_mask(back, p2);
    CHECK(slurp(p2) == bytes);

    spit(p, bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(load_mask(p), TruncatedPayload);
    std::string bad = bytes;
    bad.back() = 2;
    spit(p, bad);
    CHECK_THROWS_AS(load_mask(p), MalformedHeader);
}

TEST_CASE("csv append writes the header once")
{
    const auto p = temp_path("rows.csv");
    fs::remove(p);
    append_csv_row(p, "a,b", "1,2");
    append_csv_row(p, "a,b", "3,4");
    CHECK(slurp(p) == "a,b\n1,2\n3,4\n");
}
