#pragma once

#include <optional>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/flow/assemble.hpp"
#include "panoforge/flow/model.hpp"

namespace panoforge::flow {

// Per-step random circular column shift applied to every token grid before
// the model call and inverted after. The panoramic seam then lands at a
// different column each step, the sampling-time half of horizontal
// blending. Identity for wrap-equivariant velocity fields.
struct SeamRoll {
    uint64_t seed = 0;
};

// Explicit Euler integration of dz/dt = f(z_t, c, t) from t=0 to t=1.
// Conditions are held fixed across steps; every target shares the initial
// noise grid z0.
inline std::vector<LatentGrid> euler_integrate(const VelocityModel& model, const LatentGrid& z0,
                                               const TaskSpec& spec,
                                               const TimestepSchedule& schedule,
                                               std::optional<SeamRoll> seam_roll = std::nullopt) {
    spec.validate();
    schedule.validate();

    std::vector<LatentGrid> z(spec.targets.size(), z0);
    for (size_t j = 0; j < z.size(); ++j) z[j].tag = spec.targets[j];

    std::optional<Xoshiro256> rng;
    if (seam_roll) rng.emplace(seam_roll->seed);

    for (int k = 0; k < schedule.steps(); ++k) {
        const double t = schedule.times[k];
        const double dt = schedule.times[k + 1] - schedule.times[k];

        int shift = 0;
        const TaskSpec* call_spec = &spec;
        TaskSpec rolled_spec;
        std::vector<LatentGrid> zt = z;
        if (rng) {
            shift = int(rng->below(uint64_t(z0.width)));
            rolled_spec = spec;
            for (auto& c : rolled_spec.conditions) c = roll_columns(c, shift);
            for (auto& g : zt) g = roll_columns(g, shift);
            call_spec = &rolled_spec;
        }

        const AssembledTokens at = assemble_tokens(*call_spec, zt);
        const auto preds = model.predict(at, t);

        // Unpack per-target velocity grids from the prediction blocks.
        std::vector<LatentGrid> vel(z.size(), LatentGrid(z0.height, z0.width, z0.channels));
        if (at.branch_target_count > 0) {
            const int unit = at.branch_unit_channels;
            const int pc = at.streams[0].pred_channels;
            for (size_t j = 0; j < z.size(); ++j)
                for (size_t tok = 0; tok < at.tokens_per_stream(); ++tok)
                    for (int ch = 0; ch < unit; ++ch)
                        vel[j].data[tok * unit + ch] = preds[0][tok * pc + j * unit + ch];
        } else {
            size_t tgt = 0;
            for (size_t s = 0; s < at.streams.size(); ++s) {
                if (!at.streams[s].is_target) continue;
                vel[tgt].data = preds[s];
                ++tgt;
            }
        }
        if (shift != 0)
            for (auto& v : vel) v = roll_columns(v, -shift);

        for (size_t j = 0; j < z.size(); ++j)
            for (size_t i = 0; i < z[j].data.size(); ++i) z[j].data[i] += vel[j].data[i] * dt;
    }
    return z;
}

}  // namespace panoforge::flow
