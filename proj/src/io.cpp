#include "specklepair/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "specklepair/errors.hpp"

namespace specklepair {

namespace {

// Little-endian header scratch. The host is assumed little-endian (the
// supported targets are); a static check guards the float layout.
static_assert(sizeof(double) == 8 && sizeof(float) == 4,
              "ieee754 layout required");

class ByteWriter {
public:
    explicit ByteWriter(std::size_t size) : bytes_(size, 0) {}

    void magic(const char* tag)
    {
        std::memcpy(bytes_.data(), tag, 8);
        pos_ = 8;
    }
    void u32(std::uint32_t v)
    {
        std::memcpy(bytes_.data() + pos_, &v, 4);
        pos_ += 4;
    }
    void u64(std::uint64_t v)
    {
        std::memcpy(bytes_.data() + pos_, &v, 8);
        pos_ += 8;
    }
    void f64(double v)
    {
        std::memcpy(bytes_.data() + pos_, &v, 8);
        pos_ += 8;
    }
    void u8(std::uint8_t v) { bytes_[pos_++] = v; }
    void skip(std::size_t count) { pos_ += count; }
    const std::vector<char>& bytes() const { return bytes_; }

private:
    std::vector<char> bytes_;
    std::size_t pos_ = 0;
};

class ByteReader {
public:
    ByteReader(const std::string& path, std::size_t header_size,
               const char* tag)
        : stream_(path, std::ios::binary)
    {
        if (!stream_)
            throw IoError("cannot open " + path);
        header_.resize(header_size);
        stream_.read(header_.data(), static_cast<std::streamsize>(header_size));
        if (stream_.gcount() != static_cast<std::streamsize>(header_size))
            throw IoError("truncated header in " + path);
        if (std::memcmp(header_.data(), tag, 8) != 0)
            throw IoError("bad magic in " + path);
        pos_ = 8;
        path_ = path;
    }

    std::uint32_t u32()
    {
        std::uint32_t v;
        std::memcpy(&v, header_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64()
    {
        std::uint64_t v;
        std::memcpy(&v, header_.data() + pos_, 8);
        pos_ += 8;
        return v;
    }
    double f64()
    {
        double v;
        std::memcpy(&v, header_.data() + pos_, 8);
        pos_ += 8;
        return v;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(header_[pos_++]); }
    void skip(std::size_t count) { pos_ += count; }

    void payload(void* dest, std::size_t size)
    {
        stream_.read(static_cast<char*>(dest),
                     static_cast<std::streamsize>(size));
        if (stream_.gcount() != static_cast<std::streamsize>(size))
            throw IoError("truncated payload in " + path_);
    }

private:
    std::ifstream stream_;
    std::vector<char> header_;
    std::size_t pos_ = 0;
    std::string path_;
};

void write_file(const std::string& path, const std::vector<char>& header,
                const void* payload, std::size_t payload_size)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create " + path);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    if (payload_size > 0)
        out.write(static_cast<const char*>(payload),
                  static_cast<std::streamsize>(payload_size));
    if (!out)
        throw IoError("short write to " + path);
}

} // namespace

void write_field(const std::string& path, const FieldGrid& field)
{
    ByteWriter header(64);
    header.magic("SPFIELD1");
    header.u32(static_cast<std::uint32_t>(field.cols()));
    header.u32(static_cast<std::uint32_t>(field.rows()));
    header.f64(field.pitch);
    header.u8(static_cast<std::uint8_t>(field.domain));
    header.skip(7);
    header.f64(field.wavelength_nm);
    header.f64(field.lambda_f_mm2);
    write_file(path, header.bytes(), field.values.data(),
               static_cast<std::size_t>(field.values.size()) * 16);
}

FieldGrid read_field(const std::string& path)
{
    ByteReader reader(path, 64, "SPFIELD1");
    const std::uint32_t nx = reader.u32();
    const std::uint32_t ny = reader.u32();
    FieldGrid field;
    field.pitch = reader.f64();
    field.domain = static_cast<Domain>(reader.u8());
    reader.skip(7);
    field.wavelength_nm = reader.f64();
    field.lambda_f_mm2 = reader.f64();
    field.values.resize(ny, nx);
    reader.payload(field.values.data(),
                   static_cast<std::size_t>(field.values.size()) * 16);
    return field;
}

void write_mask(const std::string& path, const PhaseMask& mask, double pitch_mm)
{
    ByteWriter header(64);
    header.magic("SPMASK01");
    header.u32(static_cast<std::uint32_t>(mask.cols()));
    header.u32(static_cast<std::uint32_t>(mask.rows()));
    header.u32(static_cast<std::uint32_t>(mask.macropixel));
    header.u32(static_cast<std::uint32_t>(mask.x0));
    header.u32(static_cast<std::uint32_t>(mask.y0));
    header.skip(4);
    header.f64(pitch_mm);
    write_file(path, header.bytes(), mask.phases.data(),
               static_cast<std::size_t>(mask.phases.size()) * 8);
}

PhaseMask read_mask(const std::string& path, double* pitch_mm)
{
    ByteReader reader(path, 64, "SPMASK01");
    const std::uint32_t mx = reader.u32();
    const std::uint32_t my = reader.u32();
    PhaseMask mask;
    mask.macropixel = static_cast<int>(reader.u32());
    mask.x0 = static_cast<int>(reader.u32());
    mask.y0 = static_cast<int>(reader.u32());
    reader.skip(4);
    const double pitch = reader.f64();
    if (pitch_mm != nullptr)
        *pitch_mm = pitch;
    mask.phases.resize(my, mx);
    reader.payload(mask.phases.data(),
                   static_cast<std::size_t>(mask.phases.size()) * 8);
    return mask;
}

void write_screen(const std::string& path, const DiffuserScreen& screen)
{
    ByteWriter header(64);
    header.magic("SPSCRN01");
    header.u32(static_cast<std::uint32_t>(screen.size()));
    header.skip(4);
    header.f64(screen.pitch_mm);
    header.f64(screen.corr_length_mm);
    header.u64(screen.seed);
    write_file(path, header.bytes(), screen.phase.data(),
               static_cast<std::size_t>(screen.phase.size()) * 8);
}

DiffuserScreen read_screen(const std::string& path)
{
    ByteReader reader(path, 64, "SPSCRN01");
    const std::uint32_t n = reader.u32();
    reader.skip(4);
    DiffuserScreen screen;
    screen.pitch_mm = reader.f64();
    screen.corr_length_mm = reader.f64();
    screen.seed = reader.u64();
    screen.phase.resize(n, n);
    reader.payload(screen.phase.data(),
                   static_cast<std::size_t>(screen.phase.size()) * 8);
    return screen;
}

void write_tm(const std::string& path, const TransmissionMatrix& tm)
{
    ByteWriter header(128);
    header.magic("SPTMAT01");
    header.u32(static_cast<std::uint32_t>(tm.t.rows()));
    header.u32(static_cast<std::uint32_t>(tm.t.cols()));
    header.u8(static_cast<std::uint8_t>(tm.basis));
    header.u8(static_cast<std::uint8_t>(tm.policy));
    header.skip(6);
    header.u64(tm.screen_seed);
    header.u32(static_cast<std::uint32_t>(tm.geom.grid_n));
    header.skip(4);
    header.f64(tm.geom.pitch_mm);
    header.u32(static_cast<std::uint32_t>(tm.geom.slm_roi.x0));
    header.u32(static_cast<std::uint32_t>(tm.geom.slm_roi.y0));
    header.u32(static_cast<std::uint32_t>(tm.geom.slm_roi.w));
    header.u32(static_cast<std::uint32_t>(tm.geom.slm_roi.h));
    header.u32(static_cast<std::uint32_t>(tm.geom.macropixel));
    header.u32(static_cast<std::uint32_t>(tm.geom.cam_roi.x0));
    header.u32(static_cast<std::uint32_t>(tm.geom.cam_roi.y0));
    header.u32(static_cast<std::uint32_t>(tm.geom.cam_roi.w));
    header.u32(static_cast<std::uint32_t>(tm.geom.cam_roi.h));
    header.skip(4);
    header.f64(tm.geom.wavelength_nm);
    header.f64(tm.geom.focal_mm);

    // complex64 payload, row-major
    std::vector<float> payload;
    payload.reserve(static_cast<std::size_t>(tm.t.size()) * 2);
    for (Eigen::Index r = 0; r < tm.t.rows(); ++r)
        for (Eigen::Index c = 0; c < tm.t.cols(); ++c) {
            payload.push_back(static_cast<float>(tm.t(r, c).real()));
            payload.push_back(static_cast<float>(tm.t(r, c).imag()));
        }
    write_file(path, header.bytes(), payload.data(), payload.size() * 4);
}

TransmissionMatrix read_tm(const std::string& path)
{
    ByteReader reader(path, 128, "SPTMAT01");
    const std::uint32_t rows = reader.u32();
    const std::uint32_t cols = reader.u32();
    TransmissionMatrix tm;
    tm.basis = static_cast<ProbeBasis>(reader.u8());
    tm.policy = static_cast<ReferencePolicy>(reader.u8());
    reader.skip(6);
    tm.screen_seed = reader.u64();
    tm.geom.grid_n = static_cast<int>(reader.u32());
    reader.skip(4);
    tm.geom.pitch_mm = reader.f64();
    tm.geom.slm_roi.x0 = static_cast<int>(reader.u32());
    tm.geom.slm_roi.y0 = static_cast<int>(reader.u32());
    tm.geom.slm_roi.w = static_cast<int>(reader.u32());
    tm.geom.slm_roi.h = static_cast<int>(reader.u32());
    tm.geom.macropixel = static_cast<int>(reader.u32());
    tm.geom.cam_roi.x0 = static_cast<int>(reader.u32());
    tm.geom.cam_roi.y0 = static_cast<int>(reader.u32());
    tm.geom.cam_roi.w = static_cast<int>(reader.u32());
    tm.geom.cam_roi.h = static_cast<int>(reader.u32());
    reader.skip(4);
    tm.geom.wavelength_nm = reader.f64();
    tm.geom.focal_mm = reader.f64();

    std::vector<float> payload(static_cast<std::size_t>(rows) * cols * 2);
    reader.payload(payload.data(), payload.size() * 4);
    tm.t.resize(rows, cols);
    std::size_t k = 0;
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) {
            tm.t(r, c) = std::complex<double>(payload[k], payload[k + 1]);
            k += 2;
        }
    return tm;
}

void write_frames(const std::string& path, const FrameStack& stack)
{
    ByteWriter header(128);
    header.magic("SPFRAM01");
    header.u32(static_cast<std::uint32_t>(stack.n));
    header.u32(static_cast<std::uint32_t>(stack.frames));
    header.f64(stack.freq_pitch);
    header.f64(stack.lambda_pairs);
    header.f64(stack.config.eta_signal);
    header.f64(stack.config.eta_idler);
    header.f64(stack.config.fill);
    header.f64(stack.config.spurious);
    header.f64(stack.config.signal_transmission);
    header.u64(stack.config.seed);
    header.u64(stack.detected_pairs_total);
    header.u64(stack.generated_pairs_total);
    write_file(path, header.bytes(), stack.bits.data(), stack.bits.size());
}

FrameStack read_frames(const std::string& path)
{
    ByteReader reader(path, 128, "SPFRAM01");
    FrameStack stack;
    stack.n = static_cast<int>(reader.u32());
    stack.frames = static_cast<int>(reader.u32());
    stack.freq_pitch = reader.f64();
    stack.lambda_pairs = reader.f64();
    stack.config.eta_signal = reader.f64();
    stack.config.eta_idler = reader.f64();
    stack.config.fill = reader.f64();
    stack.config.spurious = reader.f64();
    stack.config.signal_transmission = reader.f64();
    stack.config.seed = reader.u64();
    stack.config.frames = stack.frames;
    stack.detected_pairs_total = reader.u64();
    stack.generated_pairs_total = reader.u64();
    stack.bits.resize(static_cast<std::size_t>(stack.frames) *
                      stack.frame_bytes());
    reader.payload(stack.bits.data(), stack.bits.size());
    return stack;
}

void write_corr(const std::string& path, const CorrelationMap& map)
{
    ByteWriter header(128);
    header.magic("SPCORR01");
    header.u32(static_cast<std::uint32_t>(map.n));
    header.u32(static_cast<std::uint32_t>(map.frames_used));
    header.f64(map.freq_pitch);
    header.u8(static_cast<std::uint8_t>(map.normalization));
    header.u8(static_cast<std::uint8_t>(map.subtraction));
    header.skip(6);
    header.f64(map.lambda_pairs);
    write_file(path, header.bytes(), map.map.data(),
               static_cast<std::size_t>(map.map.size()) * 8);
}

CorrelationMap read_corr(const std::string& path)
{
    ByteReader reader(path, 128, "SPCORR01");
    CorrelationMap map;
    map.n = static_cast<int>(reader.u32());
    map.frames_used = static_cast<int>(reader.u32());
    map.freq_pitch = reader.f64();
    map.normalization = static_cast<Normalization>(reader.u8());
    map.subtraction = static_cast<Subtraction>(reader.u8());
    reader.skip(6);
    map.lambda_pairs = reader.f64();
    map.map.resize(2 * map.n - 1, 2 * map.n - 1);
    reader.payload(map.map.data(), static_cast<std::size_t>(map.map.size()) * 8);
    return map;
}

void write_pgm(const std::string& path, const RealImage& image, bool log_scale)
{
    const double peak = image.maxCoeff();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create " + path);
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    for (int y = 0; y < image.rows(); ++y)
        for (int x = 0; x < image.cols(); ++x) {
            double v = (peak > 0.0) ? image(y, x) / peak : 0.0;
            v = std::clamp(v, 0.0, 1.0);
            if (log_scale)
                v = (v > 0.0) ? std::clamp(1.0 + std::log10(v) / 4.0, 0.0, 1.0)
                              : 0.0;
            out.put(static_cast<char>(std::lround(v * 255.0)));
        }
    if (!out)
        throw IoError("short write to " + path);
}

void write_stats_csv(const std::string& path, const PeakStats& stats)
{
    std::FILE* out = std::fopen(path.c_str(), "w");
    if (out == nullptr)
        throw IoError("cannot create " + path);
    std::fputs("centroid_x,centroid_y,sigma_x,sigma_y,amplitude,integral,"
               "contrast,frames_used,on_boundary,found\n",
               out);
    std::fprintf(out, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d\n",
                 stats.centroid_x, stats.centroid_y, stats.sigma_x,
                 stats.sigma_y, stats.amplitude, stats.integral, stats.contrast,
                 stats.frames_used, stats.on_boundary ? 1 : 0,
                 stats.found ? 1 : 0);
    if (std::fclose(out) != 0)
        throw IoError("short write to " + path);
}

PeakStats read_stats_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::string header_line, data_line;
    if (!std::getline(in, header_line) || !std::getline(in, data_line))
        throw IoError("truncated stats table " + path);
    std::stringstream row(data_line);
    PeakStats stats;
    std::string cell;
    auto next = [&]() {
        if (!std::getline(row, cell, ','))
            throw IoError("malformed stats table " + path);
        return std::stod(cell);
    };
    stats.centroid_x = next();
    stats.centroid_y = next();
    stats.sigma_x = next();
    stats.sigma_y = next();
    stats.amplitude = next();
    stats.integral = next();
    stats.contrast = next();
    stats.frames_used = static_cast<int>(next());
    stats.on_boundary = next() != 0.0;
    stats.found = next() != 0.0;
    return stats;
}

std::uint64_t fnv1a64(const void* data, std::size_t size)
{
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 14695981039346656037ull;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

std::uint64_t fnv1a64_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::uint64_t hash = 14695981039346656037ull;
    char buffer[65536];
    while (in) {
        in.read(buffer, sizeof(buffer));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot create " + path);
    for (const auto& [key, value] : entries)
        out << key << "=" << value << "\n";
    if (!out)
        throw IoError("short write to " + path);
}

} // namespace specklepair
