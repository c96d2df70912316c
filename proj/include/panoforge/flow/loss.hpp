#pragma once

#include "panoforge/flow/assemble.hpp"
#include "panoforge/flow/model.hpp"

namespace panoforge::flow {

// Flow matching loss: mean squared error between the model prediction and
// the straight-line velocity v = z1 - z0, averaged over target tokens and
// channels only. Multiple targets are averaged jointly.
inline double fm_loss(const VelocityModel& model, const FlowState& state, const TaskSpec& spec) {
    const AssembledTokens at = assemble_tokens(spec, state.zts);
    const auto preds = model.predict(at, state.t);
    const auto vels = detail::velocity_blocks(spec, state, at);

    double sum = 0.0;
    size_t count = 0;
    for (size_t s = 0; s < at.streams.size(); ++s) {
        if (!at.streams[s].is_target) continue;
        const size_t n = at.tokens_per_stream() * size_t(at.streams[s].pred_channels);
        if (preds[s].size() != n) throw DataError("model returned wrong prediction shape");
        for (size_t k = 0; k < n; ++k) {
            const double diff = preds[s][k] - vels[s][k];
            sum += diff * diff;
        }
        count += n;
    }
    if (count == 0) throw DataError("fm_loss: no target tokens");
    return sum / double(count);
}

}  // namespace panoforge::flow
