#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "panicle/io.hpp"

namespace panicle {

namespace {

bool hasSuffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    std::string tail = s.substr(s.size() - suffix.size());
    for (char& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tail == suffix;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageBuffer readPng(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open image: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("malformed PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
        png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    ImageBuffer img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    if (img.channels == 2) {
        // gray+alpha: drop alpha below
    } else if (img.channels < 1 || img.channels > 4) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG channel count in " + path);
    }
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.width) * img.height * img.channels);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = raw.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (img.channels == 2) {
        ImageBuffer gray(img.width, img.height, 1);
        for (std::size_t i = 0; i < gray.data.size(); ++i) gray.data[i] = raw[i * 2];
        return gray;
    }
    img.data = std::move(raw);
    return img;
}

void writePng(const ImageBuffer& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG write failed: " + path);
    }
    png_init_io(png, fp.get());
    int color_type = PNG_COLOR_TYPE_GRAY;
    if (img.channels == 3) color_type = PNG_COLOR_TYPE_RGB;
    if (img.channels == 4) color_type = PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.pixel(0, y));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageBuffer readPgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") throw DataError("not a PGM file: " + path);
    const auto nextInt = [&]() {
        // skip whitespace and '#' comment lines
        for (;;) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v = -1;
        in >> v;
        if (!in || v < 0) throw DataError("malformed PGM header: " + path);
        return v;
    };
    const long w = nextInt(), h = nextInt(), maxval = nextInt();
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw DataError("unsupported PGM dimensions or maxval: " + path);
    ImageBuffer img(static_cast<int>(w), static_cast<int>(h), 1);
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
        if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
            throw DataError("truncated PGM body: " + path);
    } else {
        for (auto& px : img.data) {
            long v = -1;
            in >> v;
            if (!in || v < 0 || v > maxval) throw DataError("malformed PGM body: " + path);
            px = static_cast<std::uint8_t>(v);
        }
    }
    return img;
}

void writePgm(const ImageBuffer& img, const std::string& path) {
    if (img.channels != 1) throw UsageError("PGM supports single-channel images only");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace

ImageBuffer readImage(const std::string& path) {
    if (hasSuffix(path, ".pgm")) return readPgm(path);
    return readPng(path);
}

void writeImage(const ImageBuffer& image, const std::string& path) {
    if (hasSuffix(path, ".pgm"))
        writePgm(image, path);
    else
        writePng(image, path);
}

BinaryMask readMask(const std::string& path) {
    const ImageBuffer img = readImage(path);
    BinaryMask mask(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            mask.set(x, y, img.pixel(x, y)[0] >= 128);
    return mask;
}

void writeMask(const BinaryMask& mask, const std::string& path) {
    ImageBuffer img(mask.width, mask.height, 1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            img.pixel(x, y)[0] = mask.at(x, y) ? 255 : 0;
    writeImage(img, path);
}

}  // namespace panicle
