#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/panomap.hpp"

namespace panoforge::flow {

enum class LatentTag { Generic, RGB, Distance, Normal, Albedo, Roughness, Metallic, Mask };

inline const char* tag_name(LatentTag t) {
    switch (t) {
        case LatentTag::Generic: return "generic";
        case LatentTag::RGB: return "rgb";
        case LatentTag::Distance: return "distance";
        case LatentTag::Normal: return "normal";
        case LatentTag::Albedo: return "albedo";
        case LatentTag::Roughness: return "roughness";
        case LatentTag::Metallic: return "metallic";
        case LatentTag::Mask: return "mask";
    }
    return "?";
}

// A token grid: height x width tokens of `channels` values each.
struct LatentGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    LatentTag tag = LatentTag::Generic;
    std::vector<double> data;  // row-major, token-major

    LatentGrid() = default;
    LatentGrid(int h, int w, int c, LatentTag t = LatentTag::Generic)
        : height(h), width(w), channels(c), tag(t), data(size_t(h) * w * c, 0.0) {
        if (h < 1 || w < 1 || c < 1) throw DataError("LatentGrid dimensions must be >= 1");
    }

    double& at(int row, int col, int ch) {
        return data[(size_t(row) * width + col) * channels + ch];
    }
    double at(int row, int col, int ch) const {
        return data[(size_t(row) * width + col) * channels + ch];
    }

    size_t tokens() const { return size_t(height) * width; }
    bool same_shape(const LatentGrid& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    bool same_grid(const LatentGrid& o) const { return height == o.height && width == o.width; }

    void require_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) throw NumericalError("LatentGrid contains non-finite values");
    }
};

inline LatentGrid roll_columns(const LatentGrid& g, int shift) {
    int s = shift % g.width;
    if (s < 0) s += g.width;
    LatentGrid out(g.height, g.width, g.channels, g.tag);
    for (int r = 0; r < g.height; ++r)
        for (int c = 0; c < g.width; ++c)
            for (int ch = 0; ch < g.channels; ++ch) out.at(r, (c + s) % g.width, ch) = g.at(r, c, ch);
    return out;
}

// Straight-line interpolation z_t = (1-t) z0 + t z1.
inline LatentGrid interpolate(const LatentGrid& z0, const LatentGrid& z1, double t) {
    if (!z0.same_shape(z1)) throw DataError("interpolate: shape mismatch");
    if (t < 0.0 || t > 1.0) throw DataError("interpolate: t must lie in [0, 1]");
    LatentGrid zt(z0.height, z0.width, z0.channels, z1.tag);
    for (size_t k = 0; k < z0.data.size(); ++k)
        zt.data[k] = (1.0 - t) * z0.data[k] + t * z1.data[k];
    return zt;
}

// Velocity of the straight-line path, v = z1 - z0.
inline LatentGrid velocity_target(const LatentGrid& z0, const LatentGrid& z1) {
    if (!z0.same_shape(z1)) throw DataError("velocity_target: shape mismatch");
    LatentGrid v(z0.height, z0.width, z0.channels, z1.tag);
    for (size_t k = 0; k < z0.data.size(); ++k) v.data[k] = z1.data[k] - z0.data[k];
    return v;
}

enum class Assembly { SharedBranch, SharedAdapter, SeparateAdapter };

inline const char* assembly_name(Assembly a) {
    switch (a) {
        case Assembly::SharedBranch: return "shared-branch";
        case Assembly::SharedAdapter: return "shared-adapter";
        case Assembly::SeparateAdapter: return "separate-adapter";
    }
    return "?";
}

// Declarative description of one flow-matching task: ordered condition
// inputs, target output tags, and how streams are assembled for the model.
// The prompt is carried but never interpreted.
struct TaskSpec {
    std::vector<LatentGrid> conditions;
    std::vector<LatentTag> targets;
    Assembly assembly = Assembly::SeparateAdapter;
    std::string prompt;

    void validate() const {
        if (targets.empty()) throw DataError("TaskSpec needs at least one target");
        for (size_t i = 1; i < conditions.size(); ++i)
            if (!conditions[i].same_grid(conditions[0]))
                throw DataError("TaskSpec conditions must share grid dimensions");
    }
};

// Monotone integration times 0 = t0 < t1 < ... < tN = 1.
struct TimestepSchedule {
    std::vector<double> times;

    static TimestepSchedule uniform(int steps) {
        if (steps < 1) throw DataError("schedule needs at least one step");
        TimestepSchedule s;
        s.times.resize(size_t(steps) + 1);
        for (int k = 0; k <= steps; ++k) s.times[k] = double(k) / steps;
        s.times.front() = 0.0;
        s.times.back() = 1.0;
        return s;
    }

    int steps() const { return int(times.size()) - 1; }

    void validate() const {
        if (times.size() < 2 || times.front() != 0.0 || times.back() != 1.0)
            throw DataError("schedule must start at 0 and end at 1");
        for (size_t k = 1; k < times.size(); ++k)
            if (!(times[k] > times[k - 1])) throw DataError("schedule times must increase strictly");
    }
};

// Snapshot of one training example at time t. zt is exact at construction;
// the loss mask (filled in by assembly) covers target tokens only.
struct FlowState {
    LatentGrid z0;
    std::vector<LatentGrid> z1s;
    double t = 0.0;
    std::vector<LatentGrid> zts;
    std::vector<uint8_t> loss_mask;  // per assembled token

    static FlowState make(const LatentGrid& z0, const std::vector<LatentGrid>& z1s, double t) {
        FlowState s;
        s.z0 = z0;
        s.z1s = z1s;
        s.t = t;
        s.zts.reserve(z1s.size());
        for (const auto& z1 : z1s) {
            if (!z1.same_shape(z0)) throw DataError("FlowState: z1 shape must match z0");
            s.zts.push_back(interpolate(z0, z1, t));
        }
        return s;
    }
};

}  // namespace panoforge::flow
