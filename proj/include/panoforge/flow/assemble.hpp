#pragma once

#include <utility>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/flow/latent.hpp"

namespace panoforge::flow {

// One contiguous block of h*w tokens in the assembled sequence.
struct StreamInfo {
    LatentTag tag = LatentTag::Generic;
    bool is_target = false;
    int route_id = 0;
    int channels = 0;       // input channels per token
    int pred_channels = 0;  // channels the velocity model must emit per token
};

// Token sequence handed to the velocity model. Streams are stored as
// separate blocks because token channel widths may differ per stream in
// the token-axis modes; position ids are shared across streams so tokens
// of the same (row, col) align.
struct AssembledTokens {
    int grid_h = 0;
    int grid_w = 0;
    std::vector<StreamInfo> streams;
    std::vector<std::vector<double>> stream_tokens;   // per stream: h*w x channels
    std::vector<int> route_ids;                       // per token
    std::vector<std::pair<int, int>> position_ids;    // per token (row, col)
    std::vector<uint8_t> loss_mask;                   // per token, 1 = target token
    // SharedBranch only: layout of the channel-concatenated token.
    int branch_target_offset = 0;
    int branch_unit_channels = 0;
    int branch_condition_count = 0;
    int branch_target_count = 0;

    size_t tokens_per_stream() const { return size_t(grid_h) * grid_w; }
    size_t token_count() const { return route_ids.size(); }

    int route_count() const {
        int maxr = -1;
        for (const auto& s : streams) maxr = std::max(maxr, s.route_id);
        return maxr + 1;
    }
};

// Lays out condition and noisy-target grids for the model.
//   SharedBranch    — every input concatenated along the channel axis into
//                     one stream (all inputs must share a channel count).
//   SharedAdapter   — streams concatenated along the token axis, one
//                     shared adapter route.
//   SeparateAdapter — token-axis concatenation with one adapter route per
//                     input slot, so each type of input gets its own weights.
// In the token-axis modes, condition and target tokens at the same
// (row, col) carry identical 2D position ids. The loss mask selects target
// tokens only.
inline AssembledTokens assemble_tokens(const TaskSpec& spec,
                                       const std::vector<LatentGrid>& zts) {
    spec.validate();
    if (zts.size() != spec.targets.size())
        throw DataError("assemble_tokens: one z_t grid per target required");
    const LatentGrid* ref = !spec.conditions.empty() ? &spec.conditions[0] : &zts[0];
    for (const auto& z : zts)
        if (!z.same_grid(*ref)) throw DataError("assemble_tokens: grids must be spatially aligned");
    for (const auto& c : spec.conditions)
        if (!c.same_grid(*ref)) throw DataError("assemble_tokens: grids must be spatially aligned");

    AssembledTokens out;
    out.grid_h = ref->height;
    out.grid_w = ref->width;
    const size_t n_tokens = size_t(out.grid_h) * out.grid_w;

    if (spec.assembly == Assembly::SharedBranch) {
        const int c0 = !spec.conditions.empty() ? spec.conditions[0].channels : zts[0].channels;
        for (const auto& c : spec.conditions)
            if (c.channels != c0)
                throw DataError("SharedBranch requires equal channel counts across inputs");
        for (const auto& z : zts)
            if (z.channels != c0)
                throw DataError("SharedBranch requires equal channel counts across inputs");

        const int n_inputs = int(spec.conditions.size() + zts.size());
        StreamInfo s;
        s.tag = LatentTag::Generic;
        s.is_target = true;
        s.route_id = 0;
        s.channels = c0 * n_inputs;
        s.pred_channels = c0 * int(zts.size());
        out.streams.push_back(s);
        out.branch_target_offset = c0 * int(spec.conditions.size());
        out.branch_unit_channels = c0;
        out.branch_condition_count = int(spec.conditions.size());
        out.branch_target_count = int(zts.size());

        std::vector<double> block(n_tokens * s.channels, 0.0);
        for (size_t k = 0; k < n_tokens; ++k) {
            double* dst = block.data() + k * s.channels;
            int off = 0;
            for (const auto& c : spec.conditions)
                for (int ch = 0; ch < c0; ++ch) dst[off++] = c.data[k * c0 + ch];
            for (const auto& z : zts)
                for (int ch = 0; ch < c0; ++ch) dst[off++] = z.data[k * c0 + ch];
        }
        out.stream_tokens.push_back(std::move(block));
        out.route_ids.assign(n_tokens, 0);
        out.loss_mask.assign(n_tokens, 1);
        out.position_ids.reserve(n_tokens);
        for (int r = 0; r < out.grid_h; ++r)
            for (int c = 0; c < out.grid_w; ++c) out.position_ids.emplace_back(r, c);
        return out;
    }

    // Token-axis modes: conditions first, then targets.
    const bool separate = spec.assembly == Assembly::SeparateAdapter;
    int slot = 0;
    auto add_stream = [&](const LatentGrid& g, bool is_target) {
        StreamInfo s;
        s.tag = g.tag;
        s.is_target = is_target;
        s.route_id = separate ? slot : 0;
        s.channels = g.channels;
        s.pred_channels = g.channels;
        out.streams.push_back(s);
        out.stream_tokens.push_back(g.data);
        for (size_t k = 0; k < n_tokens; ++k) {
            out.route_ids.push_back(s.route_id);
            out.position_ids.emplace_back(int(k) / out.grid_w, int(k) % out.grid_w);
            out.loss_mask.push_back(is_target ? 1 : 0);
        }
        ++slot;
    };
    for (const auto& c : spec.conditions) add_stream(c, false);
    for (size_t j = 0; j < zts.size(); ++j) {
        LatentGrid z = zts[j];
        z.tag = spec.targets[j];
        add_stream(z, true);
    }
    return out;
}

// Recovers the per-target z_t grids from an assembled sequence (inverse of
// the target half of assemble_tokens); used by oracle models.
inline std::vector<LatentGrid> extract_target_grids(const AssembledTokens& at) {
    std::vector<LatentGrid> grids;
    if (at.branch_target_count > 0) {
        const int unit = at.branch_unit_channels;
        const int tok_c = at.streams[0].channels;
        for (int j = 0; j < at.branch_target_count; ++j) {
            LatentGrid g(at.grid_h, at.grid_w, unit);
            const int off = at.branch_target_offset + j * unit;
            for (size_t k = 0; k < at.tokens_per_stream(); ++k)
                for (int ch = 0; ch < unit; ++ch)
                    g.data[k * unit + ch] = at.stream_tokens[0][k * tok_c + off + ch];
            grids.push_back(std::move(g));
        }
        return grids;
    }
    for (size_t s = 0; s < at.streams.size(); ++s) {
        if (!at.streams[s].is_target) continue;
        LatentGrid g(at.grid_h, at.grid_w, at.streams[s].channels, at.streams[s].tag);
        g.data = at.stream_tokens[s];
        grids.push_back(std::move(g));
    }
    return grids;
}

inline std::vector<LatentGrid> extract_condition_grids(const AssembledTokens& at) {
    std::vector<LatentGrid> grids;
    if (at.branch_target_count > 0) {
        const int unit = at.branch_unit_channels;
        const int tok_c = at.streams[0].channels;
        for (int j = 0; j < at.branch_condition_count; ++j) {
            LatentGrid g(at.grid_h, at.grid_w, unit);
            const int off = j * unit;
            for (size_t k = 0; k < at.tokens_per_stream(); ++k)
                for (int ch = 0; ch < unit; ++ch)
                    g.data[k * unit + ch] = at.stream_tokens[0][k * tok_c + off + ch];
            grids.push_back(std::move(g));
        }
        return grids;
    }
    for (size_t s = 0; s < at.streams.size(); ++s) {
        if (at.streams[s].is_target) continue;
        LatentGrid g(at.grid_h, at.grid_w, at.streams[s].channels, at.streams[s].tag);
        g.data = at.stream_tokens[s];
        grids.push_back(std::move(g));
    }
    return grids;
}

}  // namespace panoforge::flow
