#include <specinpaint/core.hpp>

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace specinpaint {

SamplingMask::SamplingMask(Index height, Index width, std::vector<std::uint8_t> sampled)
    : height_(height), width_(width), sampled_(std::move(sampled))
{
    if (height_ < 1 || width_ < 1) {
        throw InvalidArgument("mask needs height, width >= 1");
    }
    if (static_cast<Index>(sampled_.size()) != height_ * width_) {
        throw DimensionMismatch("mask flag count differs from height * width");
    }
    for (std::size_t p = 0; p < sampled_.size(); ++p) {
        if (sampled_[p] > 1) {
            throw InvalidArgument("mask flags must be 0 or 1");
        }
        if (sampled_[p]) indices_.push_back(static_cast<Index>(p));
    }
    if (indices_.empty()) {
        throw InvalidArgument("mask must sample at least one pixel");
    }
}

SamplingMask SamplingMask::from_indices(Index height, Index width, const std::vector<Index>& indices)
{
    if (height < 1 || width < 1) {
        throw InvalidArgument("mask needs height, width >= 1");
    }
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(height * width), 0);
    for (Index p : indices) {
        if (p < 0 || p >= height * width) {
            throw InvalidArgument("mask index " + std::to_string(p) + " out of range");
        }
        if (flags[static_cast<std::size_t>(p)]) {
            throw InvalidArgument("mask index " + std::to_string(p) + " repeated");
        }
        flags[static_cast<std::size_t>(p)] = 1;
    }
    return SamplingMask(height, width, std::move(flags));
}

SamplingMask SamplingMask::full(Index height, Index width)
{
    if (height < 1 || width < 1) {
        throw InvalidArgument("mask needs height, width >= 1");
    }
    return SamplingMask(height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height * width), 1));
}

Observation::Observation(SamplingMask mask, Eigen::MatrixXd values)
    : mask_(std::move(mask)), values_(std::move(values))
{
    if (values_.cols() != mask_.sampled_count()) {
        throw DimensionMismatch("observation has " + std::to_string(values_.cols()) +
                                " columns but mask samples " + std::to_string(mask_.sampled_count()));
    }
    if (values_.rows() < 1) {
        throw InvalidArgument("observation needs at least one band");
    }
    if (!values_.allFinite()) {
        throw NonFiniteError("observation contains NaN or Inf");
    }
}

Observation apply_mask(const SpectrumImage& x, const SamplingMask& mask)
{
    if (x.height() != mask.height() || x.width() != mask.width()) {
        throw DimensionMismatch("mask is " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                                ", image is " + std::to_string(x.height()) + "x" + std::to_string(x.width()));
    }
    const auto& idx = mask.indices();
    Eigen::MatrixXd values(x.bands(), mask.sampled_count());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        values.col(static_cast<Index>(j)) = x.data().col(idx[j]);
    }
    return Observation(mask, std::move(values));
}

SpectrumImage embed(const Observation& y)
{
    const auto& mask = y.mask();
    CubeMatrix data = CubeMatrix::Zero(y.bands(), mask.pixels());
    const auto& idx = mask.indices();
    for (std::size_t j = 0; j < idx.size(); ++j) {
        data.col(idx[j]) = y.values().col(static_cast<Index>(j));
    }
    return SpectrumImage(mask.height(), mask.width(), std::move(data));
}

// ---------------------------------------------------------------------------
// File IO
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMagic = "SSI1";
constexpr std::size_t kMaxHeaderBytes = 1 << 20;

struct Header
{
    std::uint64_t height = 0;
    std::uint64_t width = 0;
    std::uint64_t bands = 0;
    std::optional<std::vector<double>> energy_axis;
};

std::string format_header(std::uint64_t height, std::uint64_t width, std::uint64_t bands, const char* dtype,
                          const std::optional<std::vector<double>>& energy_axis)
{
    nlohmann::ordered_json j;
    j["magic"] = kMagic;
    j["height"] = height;
    j["width"] = width;
    j["bands"] = bands;
    j["dtype"] = dtype;
    j["order"] = "band-major";
    if (energy_axis) j["energy_axis"] = *energy_axis;
    return j.dump() + "\n";
}

std::uint64_t read_dim(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || !j[key].is_number_unsigned()) {
        throw MalformedHeader(std::string("header field '") + key + "' missing or not a positive integer");
    }
    const auto v = j[key].get<std::uint64_t>();
    if (v == 0) {
        throw MalformedHeader(std::string("header field '") + key + "' must be >= 1");
    }
    return v;
}

Header read_header(std::istream& in, const std::string& expected_dtype, const std::filesystem::path& path)
{
    std::string line;
    char c;
    while (in.get(c)) {
        if (c == '\n') break;
        line.push_back(c);
        if (line.size() > kMaxHeaderBytes) {
            throw MalformedHeader(path.string() + ": header line too long");
        }
    }
    if (!in) {
        throw MalformedHeader(path.string() + ": header not terminated by newline");
    }

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedHeader(path.string() + ": header is not valid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) {
        throw MalformedHeader(path.string() + ": header is not a JSON object");
    }
    if (j.value("magic", std::string{}) != kMagic) {
        throw MalformedHeader(path.string() + ": bad magic");
    }
    if (j.value("dtype", std::string{}) != expected_dtype) {
        throw MalformedHeader(path.string() + ": expected dtype " + expected_dtype);
    }
    if (j.value("order", std::string{}) != "band-major") {
        throw MalformedHeader(path.string() + ": expected order band-major");
    }

    Header h;
    h.height = read_dim(j, "height");
    h.width = read_dim(j, "width");
    h.bands = read_dim(j, "bands");
    if (j.contains("energy_axis")) {
        try {
            h.energy_axis = j["energy_axis"].get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw MalformedHeader(path.string() + ": energy_axis must be an array of numbers");
        }
    }
    return h;
}

/// Element count h*w*b and byte count, or DimensionOverflow.
std::uint64_t checked_count(const Header& h, std::uint64_t bytes_per_value, const std::filesystem::path& path)
{
    constexpr auto max_index = static_cast<std::uint64_t>(std::numeric_limits<Index>::max());
    std::uint64_t n = h.height;
    for (std::uint64_t f : {h.width, h.bands, bytes_per_value}) {
        if (n > max_index / f) {
            throw DimensionOverflow(path.string() + ": declared dimensions overflow");
        }
        n *= f;
    }
    return n / bytes_per_value;
}

std::string read_payload(std::istream& in, std::uint64_t bytes, const std::filesystem::path& path)
{
    std::string buf(static_cast<std::size_t>(bytes), '\0');
    in.read(buf.data(), static_cast<std::streamsize>(bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != bytes) {
        throw TruncatedPayload(path.string() + ": payload holds " + std::to_string(in.gcount()) + " bytes, expected " +
                               std::to_string(bytes));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError(path.string() + ": unexpected bytes after payload");
    }
    return buf;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::uint32_t to_little(std::uint32_t v)
{
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    }
    return v;
}

} // namespace

SpectrumImage load_cube(const std::filesystem::path& path)
{
    auto in = open_in(path);
    const Header h = read_header(in, "f32le", path);
    const std::uint64_t count = checked_count(h, 4, path);
    const std::string payload = read_payload(in, count * 4, path);

    const auto height = static_cast<Index>(h.height);
    const auto width = static_cast<Index>(h.width);
    CubeMatrix data(static_cast<Index>(h.bands), height * width);
    double* out = data.data();
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, payload.data() + 4 * i, 4);
        out[i] = static_cast<double>(std::bit_cast<float>(to_little(bits)));
    }
    return SpectrumImage(height, width, std::move(data), h.energy_axis);
}

void store_cube(const SpectrumImage& x, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << format_header(static_cast<std::uint64_t>(x.height()), static_cast<std::uint64_t>(x.width()),
                         static_cast<std::uint64_t>(x.bands()), "f32le", x.energy_axis());
    const auto count = static_cast<std::size_t>(x.data().size());
    std::string payload(count * 4, '\0');
    const double* in = x.data().data();
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(in[i])));
        std::memcpy(payload.data() + 4 * i, &bits, 4);
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

SamplingMask load_mask(const std::filesystem::path& path)
{
    auto in = open_in(path);
    const Header h = read_header(in, "u8", path);
    if (h.bands != 1) {
        throw MalformedHeader(path.string() + ": mask header must declare bands = 1");
    }
    const std::uint64_t count = checked_count(h, 1, path);
    const std::string payload = read_payload(in, count, path);

    std::vector<std::uint8_t> flags(payload.begin(), payload.end());
    for (auto f : flags) {
        if (f > 1) throw MalformedHeader(path.string() + ": mask payload bytes must be 0 or 1");
    }
    return SamplingMask(static_cast<Index>(h.height), static_cast<Index>(h.width), std::move(flags));
}

void store_mask(const SamplingMask& mask, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << format_header(static_cast<std::uint64_t>(mask.height()), static_cast<std::uint64_t>(mask.width()), 1, "u8",
                         std::nullopt);
    const auto& flags = mask.flags();
    out.write(reinterpret_cast<const char*>(flags.data()), static_cast<std::streamsize>(flags.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void append_csv_row(const std::filesystem::path& path, const std::string& header, const std::string& row)
{
    std::error_code ec;
    const bool needs_header = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot open " + path.string() + " for appending");
    if (needs_header) out << header << '\n';
    out << row << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace specinpaint
