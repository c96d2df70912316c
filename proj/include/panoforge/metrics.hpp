#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/panomap.hpp"

// Panoramic perception metrics. Every kernel works on pixels valid in
// BOTH maps; invalid samples never influence a result.

namespace panoforge {

struct MetricReport {
    std::string task;
    std::map<std::string, double> values;
    size_t valid_pixel_count = 0;
};

namespace detail {

inline void require_same_dims(const PanoMap& a, const PanoMap& b) {
    if (!a.same_shape(b)) throw DataError("metric inputs must share dimensions and channels");
}

inline double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// AbsRel, delta-1.25 (strict, symmetric ratio), MAE, RMSE over pixels
// valid in both maps with gt > 0. median_scale optionally rescales the
// prediction by median(gt)/median(pred) first (off by default).
inline MetricReport distance_metrics(const PanoMap& pred, const PanoMap& gt,
                                     bool median_scale = false) {
    detail::require_same_dims(pred, gt);
    if (pred.channels() != 1) throw DataError("distance metrics expect single-channel maps");

    double scale = 1.0;
    if (median_scale) {
        std::vector<double> ps, gs;
        for (int j = 0; j < gt.height(); ++j)
            for (int i = 0; i < gt.width(); ++i)
                if (gt.valid(j, i) && pred.valid(j, i) && gt.at(j, i) > 0.0f) {
                    ps.push_back(pred.at(j, i));
                    gs.push_back(gt.at(j, i));
                }
        if (ps.empty()) throw DataError("no valid overlapping pixels");
        const double mp = detail::median_of(ps);
        if (mp != 0.0) scale = detail::median_of(gs) / mp;
    }

    double abs_rel = 0.0, mae = 0.0, mse = 0.0;
    size_t n = 0, within = 0;
    for (int j = 0; j < gt.height(); ++j) {
        for (int i = 0; i < gt.width(); ++i) {
            if (!gt.valid(j, i) || !pred.valid(j, i) || !(gt.at(j, i) > 0.0f)) continue;
            const double g = gt.at(j, i);
            const double p = double(pred.at(j, i)) * scale;
            const double diff = std::abs(p - g);
            abs_rel += diff / g;
            mae += diff;
            mse += diff * diff;
            if (std::max(p / g, g / p) < 1.25) ++within;
            ++n;
        }
    }
    if (n == 0) throw DataError("no valid overlapping pixels");

    MetricReport r;
    r.task = "distance";
    r.valid_pixel_count = n;
    r.values["absrel"] = abs_rel / double(n);
    r.values["delta_125"] = double(within) / double(n);
    r.values["mae"] = mae / double(n);
    r.values["rmse"] = std::sqrt(mse / double(n));
    return r;
}

// Angular error in degrees: mean, median, and the fraction of pixels
// below 5 and 30 degrees. Vectors are normalized before comparison;
// zero-length ground-truth vectors are excluded.
inline MetricReport normal_metrics(const PanoMap& pred, const PanoMap& gt) {
    detail::require_same_dims(pred, gt);
    if (pred.channels() != 3) throw DataError("normal metrics expect 3-channel maps");

    std::vector<double> errors;
    for (int j = 0; j < gt.height(); ++j) {
        for (int i = 0; i < gt.width(); ++i) {
            if (!gt.valid(j, i) || !pred.valid(j, i)) continue;
            const Vec3 g{gt.at(j, i, 0), gt.at(j, i, 1), gt.at(j, i, 2)};
            const Vec3 p{pred.at(j, i, 0), pred.at(j, i, 1), pred.at(j, i, 2)};
            const double gn = g.norm(), pn = p.norm();
            if (gn == 0.0 || pn == 0.0) continue;
            const double c = std::clamp(g.dot(p) / (gn * pn), -1.0, 1.0);
            errors.push_back(std::acos(c) * 180.0 / kPi);
        }
    }
    if (errors.empty()) throw DataError("no valid overlapping pixels");

    double mean = 0.0;
    size_t lt5 = 0, lt30 = 0;
    for (double e : errors) {
        mean += e;
        if (e < 5.0) ++lt5;
        if (e < 30.0) ++lt30;
    }
    MetricReport r;
    r.task = "normal";
    r.valid_pixel_count = errors.size();
    r.values["mean_deg"] = mean / double(errors.size());
    r.values["median_deg"] = detail::median_of(errors);
    r.values["pct_lt5"] = double(lt5) / double(errors.size());
    r.values["pct_lt30"] = double(lt30) / double(errors.size());
    return r;
}

// PSNR with MAX = 1 over valid pixels and all channels. Identical inputs
// report the +infinity sentinel.
inline MetricReport image_metrics(const PanoMap& pred, const PanoMap& gt) {
    detail::require_same_dims(pred, gt);

    double mse = 0.0;
    size_t n = 0;
    for (int j = 0; j < gt.height(); ++j) {
        for (int i = 0; i < gt.width(); ++i) {
            if (!gt.valid(j, i) || !pred.valid(j, i)) continue;
            for (int ch = 0; ch < gt.channels(); ++ch) {
                const double d = double(pred.at(j, i, ch)) - double(gt.at(j, i, ch));
                mse += d * d;
            }
            ++n;
        }
    }
    if (n == 0) throw DataError("no valid overlapping pixels");
    mse /= double(n) * gt.channels();

    MetricReport r;
    r.task = "image";
    r.valid_pixel_count = n;
    r.values["psnr"] =
        mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
    r.values["mse"] = mse;
    return r;
}

}  // namespace panoforge
