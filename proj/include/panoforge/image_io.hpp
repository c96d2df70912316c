#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/panomap.hpp"

// File formats: 8-bit PNG for RGB/Albedo/Mask, 16-bit grayscale PNG for
// Roughness/Metallic (value = round(x*65535)), PFM (little-endian,
// bottom-up) for Distance (1ch) and Normal (3ch). When a map has invalid
// pixels a companion "<path>.valid.png" (0 = invalid, 255 = valid) is
// written next to it and picked up again on load.

namespace panoforge {

struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;   // 1 or 3
    int bit_depth = 8;  // 8 or 16
    std::vector<uint16_t> data;  // row-major, top-down, [0, maxval]

    int maxval() const { return bit_depth == 16 ? 65535 : 255; }
};

namespace detail {

struct PngFile {
    FILE* f = nullptr;
    explicit PngFile(const std::string& path, const char* mode) : f(std::fopen(path.c_str(), mode)) {
        if (!f) throw DataError("cannot open " + path);
    }
    ~PngFile() {
        if (f) std::fclose(f);
    }
    PngFile(const PngFile&) = delete;
    PngFile& operator=(const PngFile&) = delete;
};

}  // namespace detail

inline void write_png(const std::string& path, const RawImage& img) {
    detail::PngFile file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng write error for " + path);
    }
    png_init_io(png, file.f);
    const int color = img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, img.width, img.height, img.bit_depth, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const size_t stride = size_t(img.width) * img.channels;
    std::vector<png_byte> row(stride * (img.bit_depth / 8));
    for (int j = 0; j < img.height; ++j) {
        const uint16_t* src = img.data.data() + size_t(j) * stride;
        if (img.bit_depth == 16) {
            for (size_t k = 0; k < stride; ++k) {  // PNG stores big-endian
                row[2 * k] = png_byte(src[k] >> 8);
                row[2 * k + 1] = png_byte(src[k] & 0xff);
            }
        } else {
            for (size_t k = 0; k < stride; ++k) row[k] = png_byte(src[k]);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline RawImage read_png(const std::string& path) {
    detail::PngFile file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng read error for " + path);
    }
    png_init_io(png, file.f);
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    RawImage img;
    img.width = int(png_get_image_width(png, info));
    img.height = int(png_get_image_height(png, info));
    img.bit_depth = int(png_get_bit_depth(png, info));
    const int color = png_get_color_type(png, info);
    img.channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG color type in " + path);
    }

    const size_t stride = size_t(img.width) * img.channels;
    img.data.resize(stride * img.height);
    std::vector<png_byte> row(stride * (img.bit_depth / 8));
    for (int j = 0; j < img.height; ++j) {
        png_read_row(png, row.data(), nullptr);
        uint16_t* dst = img.data.data() + size_t(j) * stride;
        if (img.bit_depth == 16) {
            for (size_t k = 0; k < stride; ++k)
                dst[k] = uint16_t((row[2 * k] << 8) | row[2 * k + 1]);
        } else {
            for (size_t k = 0; k < stride; ++k) dst[k] = row[k];
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

// --- PFM -------------------------------------------------------------

inline void write_pfm(const std::string& path, int width, int height, int channels,
                      const std::vector<float>& data) {
    if (channels != 1 && channels != 3) throw DataError("PFM supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path);
    out << (channels == 3 ? "PF" : "Pf") << "\n" << width << " " << height << "\n-1.0\n";
    // rows bottom-up per the PFM convention
    const size_t stride = size_t(width) * channels;
    for (int j = height - 1; j >= 0; --j)
        out.write(reinterpret_cast<const char*>(data.data() + size_t(j) * stride),
                  std::streamsize(stride * sizeof(float)));
    if (!out) throw DataError("failed writing " + path);
}

inline void read_pfm(const std::string& path, int& width, int& height, int& channels,
                     std::vector<float>& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic == "PF")
        channels = 3;
    else if (magic == "Pf")
        channels = 1;
    else
        throw DataError("not a PFM file: " + path);
    double scale = 0.0;
    in >> width >> height >> scale;
    if (!in || width <= 0 || height <= 0 || scale == 0.0)
        throw DataError("malformed PFM header in " + path);
    in.get();  // single whitespace after the scale line
    const size_t stride = size_t(width) * channels;
    data.assign(stride * height, 0.0f);
    for (int j = height - 1; j >= 0; --j)
        in.read(reinterpret_cast<char*>(data.data() + size_t(j) * stride),
                std::streamsize(stride * sizeof(float)));
    if (!in) throw DataError("truncated PFM data in " + path);
    if (scale > 0.0) {  // big-endian file
        for (float& f : data) {
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            bits = __builtin_bswap32(bits);
            std::memcpy(&f, &bits, 4);
        }
    }
}

// --- PanoMap persistence ----------------------------------------------

inline std::string validity_path(const std::string& path) { return path + ".valid.png"; }

inline void save_validity(const PanoMap& map, const std::string& path) {
    RawImage img;
    img.width = map.width();
    img.height = map.height();
    img.channels = 1;
    img.bit_depth = 8;
    img.data.resize(size_t(img.width) * img.height);
    for (int j = 0; j < img.height; ++j)
        for (int i = 0; i < img.width; ++i)
            img.data[size_t(j) * img.width + i] = map.valid(j, i) ? 255 : 0;
    write_png(validity_path(path), img);
}

inline void load_validity_if_present(PanoMap& map, const std::string& path) {
    const std::string vp = validity_path(path);
    if (!std::filesystem::exists(vp)) return;
    const RawImage img = read_png(vp);
    if (img.width != map.width() || img.height != map.height() || img.channels != 1)
        throw DataError("validity raster shape mismatch: " + vp);
    for (int j = 0; j < img.height; ++j)
        for (int i = 0; i < img.width; ++i)
            map.set_valid(j, i, img.data[size_t(j) * img.width + i] != 0);
}

inline void save_panomap(const PanoMap& map, const std::string& path) {
    const Modality m = map.modality();
    if (m == Modality::Distance || m == Modality::Normal) {
        write_pfm(path, map.width(), map.height(), map.channels(), map.data());
    } else {
        RawImage img;
        img.width = map.width();
        img.height = map.height();
        img.channels = map.channels();
        img.bit_depth = (m == Modality::Roughness || m == Modality::Metallic) ? 16 : 8;
        const double maxval = img.maxval();
        img.data.resize(size_t(img.width) * img.height * img.channels);
        for (size_t k = 0; k < img.data.size(); ++k) {
            const double x = std::clamp(double(map.data()[k]), 0.0, 1.0);
            img.data[k] = uint16_t(std::lround(x * maxval));
        }
        write_png(path, img);
    }
    if (map.any_invalid()) save_validity(map, path);
}

inline PanoMap load_panomap(const std::string& path, Modality modality) {
    PanoMap map;
    if (modality == Modality::Distance || modality == Modality::Normal) {
        int w = 0, h = 0, c = 0;
        std::vector<float> data;
        read_pfm(path, w, h, c, data);
        if (c != channel_count(modality))
            throw DataError("PFM channel count does not match modality: " + path);
        map = PanoMap(w, h, modality);
        map.data() = std::move(data);
    } else {
        const RawImage img = read_png(path);
        if (img.channels != channel_count(modality))
            throw DataError("PNG channel count does not match modality: " + path);
        map = PanoMap(img.width, img.height, modality);
        const double maxval = img.maxval();
        for (size_t k = 0; k < img.data.size(); ++k)
            map.data()[k] = float(img.data[k] / maxval);
    }
    load_validity_if_present(map, path);
    return map;
}

}  // namespace panoforge
