#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/flow/loss.hpp"
#include "panoforge/flow/model.hpp"

namespace panoforge::flow {

// One training example: noise, data grids (one per target), and the
// condition rasters that complete the TaskSpec for this sample.
struct FlowSample {
    LatentGrid z0;
    std::vector<LatentGrid> z1s;
    std::vector<LatentGrid> conditions;
};

struct TrainConfig {
    int steps = 2000;
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    uint64_t seed = 0;
};

struct TrainStats {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int steps = 0;
};

// Decoupled-weight-decay Adam.
class AdamW {
public:
    AdamW(size_t n, const TrainConfig& cfg)
        : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                    cfg_.weight_decay * params[i]);
        }
    }

private:
    TrainConfig cfg_;
    std::vector<double> m_, v_;
    int t_ = 0;
};

// Optimizes a toy velocity model with AdamW. Samples cycle through the
// dataset; t is drawn uniformly per step from the seeded stream. Throws
// NumericalError with a diagnostic if the loss diverges.
inline TrainStats train_toy(TrainableVelocityModel& model, const std::vector<FlowSample>& dataset,
                            const TaskSpec& proto, const TrainConfig& cfg) {
    if (dataset.empty()) throw DataError("train_toy: empty dataset");
    proto.validate();

    std::vector<double> params = model.params();
    AdamW opt(params.size(), cfg);
    Xoshiro256 rng(cfg.seed);

    TrainStats stats;
    stats.steps = cfg.steps;
    std::vector<double> grad;
    for (int step = 0; step < cfg.steps; ++step) {
        const FlowSample& sample = dataset[size_t(step) % dataset.size()];
        TaskSpec spec = proto;
        spec.conditions = sample.conditions;
        const double t = rng.uniform();
        const FlowState state = FlowState::make(sample.z0, sample.z1s, t);
        const double loss = model.loss_and_grad(spec, state, grad);
        if (!std::isfinite(loss))
            throw NumericalError("training diverged at step " + std::to_string(step) +
                                 " (loss is not finite)");
        if (step == 0) stats.initial_loss = loss;
        stats.final_loss = loss;
        opt.step(params, grad);
        model.set_params(params);
    }
    return stats;
}

// Deterministic-pairing dataset for the constant-shift task: z1 = z0 + mu
// with mu broadcast per channel. The exact loss minimizer is v = mu.
inline std::vector<FlowSample> make_shift_dataset(int count, int grid_h, int grid_w,
                                                  const std::vector<double>& mu,
                                                  const LatentGrid& condition, uint64_t seed) {
    if (count < 1) throw DataError("dataset size must be >= 1");
    const int channels = int(mu.size());
    Xoshiro256 rng(seed);
    std::vector<FlowSample> out;
    out.reserve(count);
    for (int n = 0; n < count; ++n) {
        FlowSample s;
        s.z0 = LatentGrid(grid_h, grid_w, channels);
        for (auto& x : s.z0.data) x = rng.gaussian();
        LatentGrid z1 = s.z0;
        for (int r = 0; r < grid_h; ++r)
            for (int c = 0; c < grid_w; ++c)
                for (int ch = 0; ch < channels; ++ch) z1.at(r, c, ch) += mu[ch];
        s.z1s.push_back(std::move(z1));
        s.conditions.push_back(condition);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace panoforge::flow
