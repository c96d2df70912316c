#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panoforge/common.hpp"

namespace panoforge {

enum class Modality { RGB, Distance, Normal, Albedo, Roughness, Metallic, Mask };

inline int channel_count(Modality m) {
    switch (m) {
        case Modality::RGB:
        case Modality::Normal:
        case Modality::Albedo:
            return 3;
        default:
            return 1;
    }
}

inline const char* modality_name(Modality m) {
    switch (m) {
        case Modality::RGB: return "rgb";
        case Modality::Distance: return "distance";
        case Modality::Normal: return "normal";
        case Modality::Albedo: return "albedo";
        case Modality::Roughness: return "roughness";
        case Modality::Metallic: return "metallic";
        case Modality::Mask: return "mask";
    }
    return "?";
}

// One modality of an equirectangular panorama. Samples are row-major
// float32; the validity raster is authoritative, invalid pixels store 0.
class PanoMap {
public:
    PanoMap() = default;

    PanoMap(int width, int height, Modality modality)
        : width_(width),
          height_(height),
          modality_(modality),
          channels_(channel_count(modality)),
          data_(size_t(width) * height * channels_, 0.0f),
          valid_(size_t(width) * height, 1) {
        if (width <= 0 || height <= 0)
            throw DataError("PanoMap dimensions must be positive");
    }

    // Packed rasters (e.g. material packing) may override the channel count.
    PanoMap(int width, int height, Modality modality, int channels)
        : width_(width),
          height_(height),
          modality_(modality),
          channels_(channels),
          data_(size_t(width) * height * channels, 0.0f),
          valid_(size_t(width) * height, 1) {
        if (width <= 0 || height <= 0 || channels <= 0)
            throw DataError("PanoMap dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    Modality modality() const { return modality_; }
    int channels() const { return channels_; }

    float& at(int row, int col, int ch = 0) {
        return data_[(size_t(row) * width_ + col) * channels_ + ch];
    }
    float at(int row, int col, int ch = 0) const {
        return data_[(size_t(row) * width_ + col) * channels_ + ch];
    }

    bool valid(int row, int col) const { return valid_[size_t(row) * width_ + col] != 0; }
    void set_valid(int row, int col, bool v) {
        valid_[size_t(row) * width_ + col] = v ? 1 : 0;
        if (!v)
            for (int ch = 0; ch < channels_; ++ch) at(row, col, ch) = 0.0f;
    }

    bool any_invalid() const {
        for (uint8_t v : valid_)
            if (!v) return true;
        return false;
    }

    size_t valid_count() const {
        size_t n = 0;
        for (uint8_t v : valid_) n += v;
        return n;
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }
    std::vector<uint8_t>& validity() { return valid_; }
    const std::vector<uint8_t>& validity() const { return valid_; }

    bool same_shape(const PanoMap& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    void require_erp_aspect() const {
        if (width_ != 2 * height_)
            throw DataError("panorama must have 2:1 aspect, got " + std::to_string(width_) +
                            "x" + std::to_string(height_));
    }

private:
    int width_ = 0;
    int height_ = 0;
    Modality modality_ = Modality::RGB;
    int channels_ = 0;
    std::vector<float> data_;
    std::vector<uint8_t> valid_;
};

}  // namespace panoforge
