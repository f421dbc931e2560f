// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/image_io.hpp"

#include <png.h>

#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace relit {

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string &s, const std::string &suffix) {
    if (s.size() < suffix.size()) return false;
    std::string tail = s.substr(s.size() - suffix.size());
    for (char &c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tail == suffix;
}

}  // namespace

RadianceImage load_png(const std::string &path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("load_png: cannot open '" + path + "'");

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw IoError("load_png: '" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("load_png: libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("load_png: malformed PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth != 8 && bit_depth != 16) {
        if (bit_depth < 8 && (color_type == PNG_COLOR_TYPE_GRAY)) {
            png_set_expand_gray_1_2_4_to_8(png);
            bit_depth = 8;
        } else {
            png_destroy_read_struct(&png, &info, nullptr);
            throw IoError("load_png: unsupported bit depth " + std::to_string(bit_depth) +
                          " in '" + path + "'");
        }
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    // PNG stores 16-bit samples big-endian; swap to host order where needed.
    if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("load_png: unsupported channel count " + std::to_string(channels) +
                      " in '" + path + "'");
    }

    size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> raw(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RadianceImage out(static_cast<int>(w), static_cast<int>(h), channels);
    double denom = bit_depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
        for (size_t i = 0; i < w * static_cast<size_t>(channels); ++i) {
            double v;
            if (bit_depth == 16) {
                uint16_t s;
                std::memcpy(&s, rows[y] + i * 2, 2);
                v = s / denom;
            } else {
                v = rows[y][i] / denom;
            }
            out.data()[(static_cast<size_t>(y) * w) * channels + i] =
                static_cast<float>(srgb_decode(v));
        }
    }
    return out;
}

void save_png(const RadianceImage &img, const std::string &path) {
    if (img.empty()) throw ValidationError("save_png: empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("save_png: cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("save_png: libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("save_png: write failed for '" + path + "'");
    }
    png_init_io(png, fp.get());
    int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width(), img.height(), 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<size_t>(img.width()) * img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                double v = srgb_encode(img.at(x, y, c));
                row[static_cast<size_t>(x) * img.channels() + c] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

RadianceImage load_pfm(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_pfm: cannot open '" + path + "'");

    std::string magic;
    in >> magic;
    int channels;
    if (magic == "PF")
        channels = 3;
    else if (magic == "Pf")
        channels = 1;
    else
        throw IoError("load_pfm: bad magic '" + magic + "' in '" + path + "'");

    int w = 0, h = 0;
    double scale = 0;
    in >> w >> h >> scale;
    if (!in || w <= 0 || h <= 0)
        throw IoError("load_pfm: bad header in '" + path + "'");
    if (scale == 0) throw IoError("load_pfm: zero scale in '" + path + "'");
    in.get();  // single whitespace byte after the scale line

    bool file_little_endian = scale < 0;
    double magnitude = std::abs(scale);

    size_t count = static_cast<size_t>(w) * h * channels;
    std::vector<float> payload(count);
    in.read(reinterpret_cast<char *>(payload.data()), count * sizeof(float));
    if (static_cast<size_t>(in.gcount()) != count * sizeof(float))
        throw IoError("load_pfm: truncated payload in '" + path + "'");

    bool host_little = std::endian::native == std::endian::little;
    if (file_little_endian != host_little) {
        for (float &f : payload) {
            uint32_t u;
            std::memcpy(&u, &f, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&f, &u, 4);
        }
    }

    // PFM rows run bottom-to-top.
    RadianceImage out(w, h, channels);
    for (int y = 0; y < h; ++y) {
        const float *src = payload.data() + static_cast<size_t>(h - 1 - y) * w * channels;
        float *dst = out.data().data() + static_cast<size_t>(y) * w * channels;
        if (magnitude == 1.0) {
            std::memcpy(dst, src, static_cast<size_t>(w) * channels * sizeof(float));
        } else {
            for (int i = 0; i < w * channels; ++i)
                dst[i] = static_cast<float>(src[i] * magnitude);
        }
    }
    return out;
}

void save_pfm(const RadianceImage &img, const std::string &path) {
    if (img.empty()) throw ValidationError("save_pfm: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_pfm: cannot open '" + path + "' for writing");

    bool host_little = std::endian::native == std::endian::little;
    out << (img.channels() == 3 ? "PF" : "Pf") << "\n"
        << img.width() << " " << img.height() << "\n"
        << (host_little ? "-1.0" : "1.0") << "\n";
    for (int y = img.height() - 1; y >= 0; --y) {
        const float *src =
            img.data().data() + static_cast<size_t>(y) * img.width() * img.channels();
        out.write(reinterpret_cast<const char *>(src),
                  static_cast<size_t>(img.width()) * img.channels() * sizeof(float));
    }
    if (!out) throw IoError("save_pfm: write failed for '" + path + "'");
}

RadianceImage load_image(const std::string &path) {
    if (has_suffix(path, ".png")) return load_png(path);
    if (has_suffix(path, ".pfm")) return load_pfm(path);
    throw IoError("load_image: unsupported extension in '" + path + "'");
}

void save_image(const RadianceImage &img, const std::string &path) {
    if (has_suffix(path, ".png")) return save_png(img, path);
    if (has_suffix(path, ".pfm")) return save_pfm(img, path);
    throw IoError("save_image: unsupported extension in '" + path + "'");
}

}  // namespace relit
