/**
 * @file image_io.cpp
 * @brief PNG (libpng) and binary PPM/PGM decoding, PNG encoding.
 */

#include <sparsematte/error.hpp>
#include <sparsematte/imaging.hpp>

#include <png.h>

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

namespace sparsematte {

namespace {

/// Decoded samples before normalization.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    int maxval = 255;
    std::vector<std::uint16_t> samples;
};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReadState {
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int channels = 0;
    int bit_depth = 0;
};

RawImage read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw IoError("cannot open " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        throw IoError("libpng: out of memory");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng: out of memory");
    }
    // Heap state so nothing on this frame is modified between setjmp and a longjmp.
    const auto state = std::make_unique<PngReadState>();

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("corrupt PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    state->width = png_get_image_width(png, info);
    state->height = png_get_image_height(png, info);
    state->channels = png_get_channels(png, info);
    state->bit_depth = png_get_bit_depth(png, info);
    const auto rowbytes = png_get_rowbytes(png, info);
    state->buffer.resize(static_cast<std::size_t>(rowbytes) * state->height);
    state->rows.resize(state->height);
    for (png_uint_32 y = 0; y < state->height; ++y) {
        state->rows[y] = state->buffer.data() + static_cast<std::size_t>(y) * rowbytes;
    }
    png_read_image(png, state->rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RawImage raw;
    raw.width = static_cast<int>(state->width);
    raw.height = static_cast<int>(state->height);
    if (state->channels != 1 && state->channels != 3) {
        throw IoError("unsupported PNG channel layout in " + path.string());
    }
    raw.channels = state->channels;
    raw.maxval = state->bit_depth == 16 ? 65535 : 255;
    const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
    raw.samples.resize(count);
    if (state->bit_depth == 16) {
        for (std::size_t i = 0; i < count; ++i) {
            raw.samples[i] = static_cast<std::uint16_t>((state->buffer[2 * i] << 8) | state->buffer[2 * i + 1]);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            raw.samples[i] = state->buffer[i];
        }
    }
    return raw;
}

/// Reads the next whitespace-delimited token of a PNM header, skipping '#' comments.
std::string pnm_token(const std::string& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
        } else if (std::isspace(static_cast<unsigned char>(c)) != 0) {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos])) == 0) {
        ++pos;
    }
    return bytes.substr(start, pos - start);
}

RawImage read_pnm(const std::filesystem::path& path, const std::string& bytes) {
    std::size_t pos = 0;
    const std::string magic = pnm_token(bytes, pos);
    RawImage raw;
    raw.channels = magic == "P6" ? 3 : 1;
    try {
        raw.width = std::stoi(pnm_token(bytes, pos));
        raw.height = std::stoi(pnm_token(bytes, pos));
        raw.maxval = std::stoi(pnm_token(bytes, pos));
    } catch (const std::exception&) {
        throw IoError("malformed PNM header in " + path.string());
    }
    if (raw.width <= 0 || raw.height <= 0) {
        throw InvalidArgument("zero-dimension image: " + path.string());
    }
    if (raw.maxval <= 0 || raw.maxval > 65535) {
        throw IoError("unsupported PNM maxval in " + path.string());
    }
    ++pos;  // single whitespace byte before the raster
    const int bytes_per_sample = raw.maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
    if (bytes.size() < pos + count * bytes_per_sample) {
        throw IoError("truncated PNM raster in " + path.string());
    }
    raw.samples.resize(count);
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (std::size_t i = 0; i < count; ++i) {
        raw.samples[i] = bytes_per_sample == 2
                             ? static_cast<std::uint16_t>((data[2 * i] << 8) | data[2 * i + 1])
                             : data[i];
    }
    return raw;
}

RawImage read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    const auto got = in.gcount();
    constexpr std::array<unsigned char, 8> png_magic = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (got == 8 && std::equal(png_magic.begin(), png_magic.end(), magic.begin(),
                               [](unsigned char a, char b) { return a == static_cast<unsigned char>(b); })) {
        in.close();
        RawImage raw = read_png(path);
        if (raw.width <= 0 || raw.height <= 0) {
            throw InvalidArgument("zero-dimension image: " + path.string());
        }
        return raw;
    }
    if (got >= 2 && magic[0] == 'P' && (magic[1] == '6' || magic[1] == '5')) {
        in.seekg(0);
        const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return read_pnm(path, bytes);
    }
    throw IoError("unsupported image format: " + path.string());
}

std::vector<double> gray_of(const RawImage& raw) {
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    std::vector<double> gray(n);
    const double scale = 1.0 / raw.maxval;
    for (std::size_t i = 0; i < n; ++i) {
        if (raw.channels == 1) {
            gray[i] = raw.samples[i] * scale;
        } else {
            // first channel; trimaps and mattes stored as RGB carry equal channels
            gray[i] = raw.samples[3 * i] * scale;
        }
    }
    return gray;
}

struct PngWriteState {
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
};

void write_png(const std::filesystem::path& path, int width, int height, int channels, int depth,
               const std::vector<std::uint16_t>& samples) {
    if (depth != 8 && depth != 16) {
        throw InvalidArgument("PNG depth must be 8 or 16, got " + std::to_string(depth));
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        throw IoError("libpng: out of memory");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng: out of memory");
    }
    const auto state = std::make_unique<PngWriteState>();
    const std::size_t bps = depth == 16 ? 2 : 1;
    const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * bps;
    state->buffer.resize(rowbytes * height);
    state->rows.resize(height);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (bps == 2) {
            state->buffer[2 * i] = static_cast<png_byte>(samples[i] >> 8);
            state->buffer[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
        } else {
            state->buffer[i] = static_cast<png_byte>(samples[i]);
        }
    }
    for (int y = 0; y < height; ++y) {
        state->rows[y] = state->buffer.data() + static_cast<std::size_t>(y) * rowbytes;
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, state->rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint16_t quantize(double v, int depth) {
    const double maxval = depth == 16 ? 65535.0 : 255.0;
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint16_t>(std::floor(clamped * maxval + 0.5));
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
    const RawImage raw = read_raw(path);
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    std::vector<Rgb> rgb(n);
    const double scale = 1.0 / raw.maxval;
    for (std::size_t i = 0; i < n; ++i) {
        if (raw.channels == 3) {
            rgb[i] = Rgb(raw.samples[3 * i], raw.samples[3 * i + 1], raw.samples[3 * i + 2]) * scale;
        } else {
            rgb[i] = Rgb::Constant(raw.samples[i] * scale);
        }
        rgb[i] = rgb[i].cwiseMin(1.0);
    }
    return RasterImage(raw.width, raw.height, std::move(rgb));
}

Trimap trimap_from_gray(int width, int height, const std::vector<double>& gray) {
    std::vector<Label> labels(gray.size());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const double v = gray[i] * 255.0;
        if (v < 85.0) {
            labels[i] = Label::Background;
        } else if (v > 170.0) {
            labels[i] = Label::Foreground;
        } else {
            labels[i] = Label::Unknown;
        }
    }
    return Trimap(width, height, std::move(labels));
}

Trimap load_trimap(const std::filesystem::path& path, const RasterImage& image) {
    const RawImage raw = read_raw(path);
    if (raw.width != image.width() || raw.height != image.height()) {
        throw InvalidArgument("trimap " + path.string() + " is " + std::to_string(raw.width) + "x" +
                              std::to_string(raw.height) + ", image is " + std::to_string(image.width()) +
                              "x" + std::to_string(image.height()));
    }
    Trimap trimap = trimap_from_gray(raw.width, raw.height, gray_of(raw));
    trimap.require_both_known_labels();
    return trimap;
}

Matte load_matte(const std::filesystem::path& path) {
    const RawImage raw = read_raw(path);
    return Matte(raw.width, raw.height, gray_of(raw));
}

void save_matte(const Matte& matte, const std::filesystem::path& path, int depth) {
    std::vector<std::uint16_t> samples(matte.size());
    for (std::size_t i = 0; i < matte.size(); ++i) {
        samples[i] = quantize(matte[i], depth);
    }
    write_png(path, matte.width(), matte.height(), 1, depth, samples);
}

void save_image(const RasterImage& image, const std::filesystem::path& path, int depth) {
    std::vector<std::uint16_t> samples(image.size() * 3);
    for (std::size_t i = 0; i < image.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            samples[3 * i + c] = quantize(image[i][c], depth);
        }
    }
    write_png(path, image.width(), image.height(), 3, depth, samples);
}

void save_trimap(const Trimap& trimap, const std::filesystem::path& path) {
    std::vector<std::uint16_t> samples(trimap.size());
    for (std::size_t i = 0; i < trimap.size(); ++i) {
        switch (trimap[i]) {
            case Label::Background: samples[i] = 0; break;
            case Label::Unknown:    samples[i] = 128; break;
            case Label::Foreground: samples[i] = 255; break;
        }
    }
    write_png(path, trimap.width(), trimap.height(), 1, 8, samples);
}

}  // namespace sparsematte
