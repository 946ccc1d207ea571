#include "sdssar/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdssar/errors.hpp"

namespace fs = std::filesystem;

namespace sdssar {

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw float I/O assumes a little-endian host");

std::string read_token(std::istream& in) {
    std::string tok;
    for (;;) {
        int ch = in.peek();
        if (ch == EOF) break;
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(ch)) {
            in.get();
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(in.get()));
    }
    return tok;
}

unsigned parse_unsigned(const std::string& tok, const fs::path& path) {
    try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return static_cast<unsigned>(v);
    } catch (const std::exception&) {
        throw IoError("malformed PGM header in " + path.string());
    }
}

}  // namespace

IntensityImage read_pgm(const fs::path& path, unsigned* maxval_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (read_token(in) != "P5") throw IoError(path.string() + " is not a binary PGM (P5)");
    const unsigned width = parse_unsigned(read_token(in), path);
    const unsigned height = parse_unsigned(read_token(in), path);
    // read_token consumed exactly one whitespace byte after maxval.
    const unsigned maxval = parse_unsigned(read_token(in), path);
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
        throw IoError("unsupported PGM geometry or maxval in " + path.string());
    }
    const std::size_t n = static_cast<std::size_t>(width) * height;
    const std::size_t bytes_per = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(n * bytes_per);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
        throw IoError("truncated PGM data in " + path.string());
    }
    std::vector<double> px(n);
    for (std::size_t i = 0; i < n; ++i) {
        px[i] = bytes_per == 1 ? buf[i] : static_cast<double>((buf[2 * i] << 8) | buf[2 * i + 1]);
    }
    if (maxval_out) *maxval_out = maxval;
    return IntensityImage(width, height, std::move(px));
}

void write_pgm(const fs::path& path, const IntensityImage& image, unsigned maxval) {
    if (maxval == 0 || maxval > 65535) throw InvalidArgument("PGM maxval must be in [1, 65535]");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << image.width() << ' ' << image.height() << '\n' << maxval << '\n';
    const auto px = image.pixels();
    std::vector<unsigned char> buf;
    buf.reserve(px.size() * 2);
    for (double v : px) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, double(maxval))));
        if (maxval < 256) {
            buf.push_back(static_cast<unsigned char>(q));
        } else {
            buf.push_back(static_cast<unsigned char>(q >> 8));
            buf.push_back(static_cast<unsigned char>(q & 0xff));
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

fs::path raw_sidecar_path(const fs::path& raw_path) {
    auto p = raw_path;
    p.replace_extension(".json");
    return p;
}

namespace {

std::vector<float> read_floats(const fs::path& path, std::size_t n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<float> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float))) {
        throw IoError("raw raster " + path.string() + " is shorter than its sidecar declares");
    }
    return buf;
}

void write_floats(const fs::path& path, std::span<const double> values) {
    std::vector<float> buf(values.begin(), values.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json read_sidecar(const fs::path& raw_path) {
    const auto side = raw_sidecar_path(raw_path);
    std::ifstream in(side);
    if (!in) throw IoError("missing sidecar " + side.string());
    try {
        auto j = nlohmann::json::parse(in);
        if (!j.contains("width") || !j.contains("height")) throw IoError("sidecar lacks width/height");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad sidecar " + side.string() + ": " + e.what());
    }
}

void write_sidecar(const fs::path& raw_path, const nlohmann::json& j) {
    std::ofstream out(raw_sidecar_path(raw_path));
    if (!out) throw IoError("cannot write sidecar for " + raw_path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

IntensityImage read_raw(const fs::path& path) {
    const auto j = read_sidecar(path);
    const auto w = j.at("width").get<std::size_t>();
    const auto h = j.at("height").get<std::size_t>();
    std::optional<int> looks;
    if (j.contains("looks") && !j["looks"].is_null()) looks = j["looks"].get<int>();
    const auto buf = read_floats(path, w * h);
    return IntensityImage(w, h, std::vector<double>(buf.begin(), buf.end()), looks);
}

void write_raw(const fs::path& path, const IntensityImage& image) {
    write_floats(path, image.pixels());
    nlohmann::json j{{"width", image.width()}, {"height", image.height()}};
    j["looks"] = image.looks() ? nlohmann::json(*image.looks()) : nlohmann::json(nullptr);
    write_sidecar(path, j);
}

void write_raster_raw(const fs::path& path, const Raster& raster) {
    write_floats(path, raster.values);
    write_sidecar(path, {{"width", raster.width}, {"height", raster.height}, {"looks", nullptr}});
}

Raster read_raster_raw(const fs::path& path) {
    const auto j = read_sidecar(path);
    const auto w = j.at("width").get<std::size_t>();
    const auto h = j.at("height").get<std::size_t>();
    const auto buf = read_floats(path, w * h);
    return Raster(w, h, std::vector<double>(buf.begin(), buf.end()));
}

LoadedImage read_image(const fs::path& path) {
    LoadedImage out;
    if (path.extension() == ".pgm") {
        out.image = read_pgm(path, &out.maxval);
        out.format = out.maxval < 256 ? FileFormat::pgm8 : FileFormat::pgm16;
    } else {
        out.image = read_raw(path);
        out.format = FileFormat::raw_float;
    }
    return out;
}

void write_image(const fs::path& path, const IntensityImage& image, FileFormat format,
                 unsigned maxval) {
    switch (format) {
        case FileFormat::pgm8: write_pgm(path, image, std::min(maxval == 0 ? 255u : maxval, 255u)); break;
        case FileFormat::pgm16: write_pgm(path, image, maxval < 256 ? 65535u : maxval); break;
        case FileFormat::raw_float: write_raw(path, image); break;
    }
}

bool is_image_path(const fs::path& path) {
    const auto ext = path.extension();
    return ext == ".pgm" || ext == ".raw";
}

}  // namespace sdssar
