#include "flsmosaic/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace flsm {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

int pgm_read_token(std::istream& in, const std::filesystem::path& path) {
    // Skips whitespace and '#' comment lines between header tokens.
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            break;
        }
    }
    if (c == EOF)
        fail(path, "truncated PGM header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any)
        fail(path, "malformed PGM header");
    return value;
}

RawImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(path, "cannot open");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5')
        fail(path, "not a binary PGM (P5)");
    const int width = pgm_read_token(in, path);
    const int height = pgm_read_token(in, path);
    const int maxval = pgm_read_token(in, path);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        fail(path, "invalid PGM dimensions");

    RawImage out;
    out.bit_depth = maxval > 255 ? 16 : 8;
    out.pixels = Grid<uint16_t>(height, width);
    if (out.bit_depth == 8) {
        std::vector<uint8_t> row(width);
        for (int r = 0; r < height; ++r) {
            in.read(reinterpret_cast<char*>(row.data()), width);
            if (!in)
                fail(path, "truncated PGM data");
            for (int c = 0; c < width; ++c)
                out.pixels(r, c) = row[c];
        }
    } else {
        // 16-bit PGM samples are big-endian.
        std::vector<uint8_t> row(static_cast<size_t>(width) * 2);
        for (int r = 0; r < height; ++r) {
            in.read(reinterpret_cast<char*>(row.data()), row.size());
            if (!in)
                fail(path, "truncated PGM data");
            for (int c = 0; c < width; ++c)
                out.pixels(r, c) = static_cast<uint16_t>((row[2 * c] << 8) | row[2 * c + 1]);
        }
    }
    return out;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

RawImage read_png_file(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp)
        fail(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        fail(path, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "libpng error while reading");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "expected single-channel grayscale PNG");
    }
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        depth = 8;
    }
    png_read_update_info(png, info);

    RawImage out;
    out.bit_depth = depth;
    out.pixels = Grid<uint16_t>(static_cast<int>(height), static_cast<int>(width));
    std::vector<uint8_t> row(png_get_rowbytes(png, info));
    for (png_uint_32 r = 0; r < height; ++r) {
        png_read_row(png, row.data(), nullptr);
        if (depth == 8) {
            for (png_uint_32 c = 0; c < width; ++c)
                out.pixels(static_cast<int>(r), static_cast<int>(c)) = row[c];
        } else {
            // PNG stores 16-bit samples big-endian.
            for (png_uint_32 c = 0; c < width; ++c)
                out.pixels(static_cast<int>(r), static_cast<int>(c)) =
                    static_cast<uint16_t>((row[2 * c] << 8) | row[2 * c + 1]);
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png_impl(const std::filesystem::path& path, const void* data, int rows, int cols,
                    int depth) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp)
        fail(path, "cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        fail(path, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(path, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "libpng error while writing");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, cols, rows, depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    if (depth == 8) {
        const uint8_t* px = static_cast<const uint8_t*>(data);
        for (int r = 0; r < rows; ++r)
            png_write_row(png, const_cast<png_bytep>(px + static_cast<size_t>(r) * cols));
    } else {
        const uint16_t* px = static_cast<const uint16_t*>(data);
        std::vector<uint8_t> row(static_cast<size_t>(cols) * 2);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                const uint16_t v = px[static_cast<size_t>(r) * cols + c];
                row[2 * c] = static_cast<uint8_t>(v >> 8);
                row[2 * c + 1] = static_cast<uint8_t>(v & 0xff);
            }
            png_write_row(png, row.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

RawImage read_image(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm")
        return read_pgm(path);
    if (ext == ".png")
        return read_png_file(path);
    fail(path, "unsupported image format (expected .pgm or .png)");
}

void write_pgm(const std::filesystem::path& path, const Grid<uint8_t>& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(path, "cannot open for writing");
    out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (!out)
        fail(path, "write failed");
}

void write_pgm16(const std::filesystem::path& path, const Grid<uint16_t>& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(path, "cannot open for writing");
    out << "P5\n" << img.cols() << " " << img.rows() << "\n65535\n";
    std::vector<uint8_t> row(static_cast<size_t>(img.cols()) * 2);
    for (int r = 0; r < img.rows(); ++r) {
        for (int c = 0; c < img.cols(); ++c) {
            row[2 * c] = static_cast<uint8_t>(img(r, c) >> 8);
            row[2 * c + 1] = static_cast<uint8_t>(img(r, c) & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out)
        fail(path, "write failed");
}

void write_png(const std::filesystem::path& path, const Grid<uint8_t>& img) {
    write_png_impl(path, img.data(), img.rows(), img.cols(), 8);
}

void write_png16(const std::filesystem::path& path, const Grid<uint16_t>& img) {
    write_png_impl(path, img.data(), img.rows(), img.cols(), 16);
}

Grid<uint8_t> to_u8(const Image& img) {
    Grid<uint8_t> out(img.rows(), img.cols());
    for (size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.data()[i], 0.0, 1.0);
        out.data()[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

Grid<uint16_t> to_u16(const Image& img) {
    Grid<uint16_t> out(img.rows(), img.cols());
    for (size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.data()[i], 0.0, 1.0);
        out.data()[i] = static_cast<uint16_t>(std::lround(v * 65535.0));
    }
    return out;
}

} // namespace flsm
