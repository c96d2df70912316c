#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "panoforge/common.hpp"
#include "panoforge/flow/assemble.hpp"
#include "panoforge/flow/checkpoint.hpp"
#include "panoforge/flow/latent.hpp"
#include "panoforge/flow/lora.hpp"

namespace panoforge::flow {

// Velocity predictor f(z_t, c0, c1, ..., t). predict() returns one block
// per stream with stream.pred_channels values per token; outputs on
// condition streams exist but are never read by the loss.
class VelocityModel {
public:
    virtual ~VelocityModel() = default;
    virtual std::vector<std::vector<double>> predict(const AssembledTokens& at,
                                                     double t) const = 0;
};

// Wraps an analytic velocity field for tests and ODE baselines. The
// callback sees the reconstructed target/condition grids.
class OracleVelocityModel : public VelocityModel {
public:
    using Fn = std::function<std::vector<LatentGrid>(const std::vector<LatentGrid>& zts,
                                                     const std::vector<LatentGrid>& conditions,
                                                     double t)>;

    explicit OracleVelocityModel(Fn fn) : fn_(std::move(fn)) {}

    std::vector<std::vector<double>> predict(const AssembledTokens& at, double t) const override {
        const auto zts = extract_target_grids(at);
        const auto conds = extract_condition_grids(at);
        const auto vels = fn_(zts, conds, t);
        if (vels.size() != zts.size())
            throw DataError("oracle must return one velocity grid per target");

        std::vector<std::vector<double>> out(at.streams.size());
        if (at.branch_target_count > 0) {
            const int unit = at.branch_unit_channels;
            out[0].assign(at.tokens_per_stream() * at.streams[0].pred_channels, 0.0);
            for (size_t j = 0; j < vels.size(); ++j)
                for (size_t k = 0; k < at.tokens_per_stream(); ++k)
                    for (int ch = 0; ch < unit; ++ch)
                        out[0][k * at.streams[0].pred_channels + j * unit + ch] =
                            vels[j].data[k * unit + ch];
            return out;
        }
        size_t tgt = 0;
        for (size_t s = 0; s < at.streams.size(); ++s) {
            if (at.streams[s].is_target)
                out[s] = vels[tgt++].data;
            else
                out[s].assign(at.tokens_per_stream() * at.streams[s].pred_channels, 0.0);
        }
        return out;
    }

private:
    Fn fn_;
};

// Trainable models additionally expose a flat parameter vector and the
// analytic gradient of the flow matching loss.
class TrainableVelocityModel : public VelocityModel {
public:
    virtual std::vector<double> params() const = 0;
    virtual void set_params(const std::vector<double>& p) = 0;
    virtual double loss_and_grad(const TaskSpec& spec, const FlowState& state,
                                 std::vector<double>& grad) const = 0;
    virtual std::vector<NamedTensor> export_tensors() const = 0;
};

namespace detail {

// Per-route input/output widths discovered from an assembled example.
struct RouteDims {
    int in_channels = 0;
    int out_channels = 0;
};

inline std::map<int, RouteDims> route_dims(const AssembledTokens& at) {
    std::map<int, RouteDims> dims;
    for (const auto& s : at.streams) {
        auto it = dims.find(s.route_id);
        if (it == dims.end()) {
            dims[s.route_id] = {s.channels, s.pred_channels};
        } else if (it->second.in_channels != s.channels ||
                   it->second.out_channels != s.pred_channels) {
            throw DataError(
                "streams sharing an adapter route must share channel counts; "
                "use SeparateAdapter for mixed-width inputs");
        }
    }
    return dims;
}

// Velocity blocks aligned with predict() output, for target streams only.
inline std::vector<std::vector<double>> velocity_blocks(const TaskSpec& spec,
                                                        const FlowState& state,
                                                        const AssembledTokens& at) {
    std::vector<std::vector<double>> v(at.streams.size());
    std::vector<LatentGrid> vels;
    vels.reserve(state.z1s.size());
    for (const auto& z1 : state.z1s) vels.push_back(velocity_target(state.z0, z1));

    if (spec.assembly == Assembly::SharedBranch) {
        const int unit = at.branch_unit_channels;
        const int pc = at.streams[0].pred_channels;
        v[0].assign(at.tokens_per_stream() * pc, 0.0);
        for (size_t j = 0; j < vels.size(); ++j)
            for (size_t k = 0; k < at.tokens_per_stream(); ++k)
                for (int ch = 0; ch < unit; ++ch)
                    v[0][k * pc + j * unit + ch] = vels[j].data[k * unit + ch];
        return v;
    }
    size_t tgt = 0;
    for (size_t s = 0; s < at.streams.size(); ++s)
        if (at.streams[s].is_target) v[s] = std::move(vels[tgt++].data);
    return v;
}

inline size_t masked_value_count(const AssembledTokens& at) {
    size_t n = 0;
    for (const auto& s : at.streams)
        if (s.is_target) n += at.tokens_per_stream() * size_t(s.pred_channels);
    return n;
}

}  // namespace detail

// Per-route affine map y = W [x; t] + b. The simplest trainable velocity
// model; its exact minimizer for a constant-shift dataset is the shift.
class LinearVelocityModel : public TrainableVelocityModel {
public:
    LinearVelocityModel(const TaskSpec& spec, const std::vector<LatentGrid>& example_zts) {
        const AssembledTokens at = assemble_tokens(spec, example_zts);
        for (const auto& [route, dims] : detail::route_dims(at)) {
            Route r;
            r.in = dims.in_channels;
            r.out = dims.out_channels;
            r.weight.assign(size_t(r.out) * (r.in + 1), 0.0);
            r.bias.assign(r.out, 0.0);
            routes_[route] = std::move(r);
        }
    }

    std::vector<std::vector<double>> predict(const AssembledTokens& at, double t) const override {
        std::vector<std::vector<double>> out(at.streams.size());
        for (size_t s = 0; s < at.streams.size(); ++s) {
            const auto& info = at.streams[s];
            const Route& r = route(info.route_id, info.channels, info.pred_channels);
            const size_t n = at.tokens_per_stream();
            out[s].assign(n * info.pred_channels, 0.0);
            for (size_t k = 0; k < n; ++k) {
                const double* x = at.stream_tokens[s].data() + k * info.channels;
                double* y = out[s].data() + k * info.pred_channels;
                forward_token(r, x, t, y);
            }
        }
        return out;
    }

    std::vector<double> params() const override {
        std::vector<double> p;
        for (const auto& [id, r] : routes_) {
            p.insert(p.end(), r.weight.begin(), r.weight.end());
            p.insert(p.end(), r.bias.begin(), r.bias.end());
        }
        return p;
    }

    void set_params(const std::vector<double>& p) override {
        size_t off = 0;
        for (auto& [id, r] : routes_) {
            std::copy_n(p.begin() + off, r.weight.size(), r.weight.begin());
            off += r.weight.size();
            std::copy_n(p.begin() + off, r.bias.size(), r.bias.begin());
            off += r.bias.size();
        }
        if (off != p.size()) throw DataError("parameter vector size mismatch");
    }

    double loss_and_grad(const TaskSpec& spec, const FlowState& state,
                         std::vector<double>& grad) const override {
        const AssembledTokens at = assemble_tokens(spec, state.zts);
        const auto preds = predict(at, state.t);
        const auto vels = detail::velocity_blocks(spec, state, at);
        const double inv_n = 1.0 / double(detail::masked_value_count(at));

        std::map<int, Route> grads;
        for (const auto& [id, r] : routes_) {
            Route g;
            g.in = r.in;
            g.out = r.out;
            g.weight.assign(r.weight.size(), 0.0);
            g.bias.assign(r.bias.size(), 0.0);
            grads[id] = std::move(g);
        }

        double loss = 0.0;
        for (size_t s = 0; s < at.streams.size(); ++s) {
            const auto& info = at.streams[s];
            if (!info.is_target) continue;
            Route& g = grads[info.route_id];
            const size_t n = at.tokens_per_stream();
            for (size_t k = 0; k < n; ++k) {
                const double* x = at.stream_tokens[s].data() + k * info.channels;
                for (int o = 0; o < info.pred_channels; ++o) {
                    const double diff =
                        preds[s][k * info.pred_channels + o] - vels[s][k * info.pred_channels + o];
                    loss += diff * diff * inv_n;
                    const double dy = 2.0 * diff * inv_n;
                    double* wrow = g.weight.data() + size_t(o) * (info.channels + 1);
                    for (int i = 0; i < info.channels; ++i) wrow[i] += dy * x[i];
                    wrow[info.channels] += dy * state.t;
                    g.bias[o] += dy;
                }
            }
        }

        grad.clear();
        for (const auto& [id, g] : grads) {
            grad.insert(grad.end(), g.weight.begin(), g.weight.end());
            grad.insert(grad.end(), g.bias.begin(), g.bias.end());
        }
        return loss;
    }

    std::vector<NamedTensor> export_tensors() const override {
        std::vector<NamedTensor> ts;
        for (const auto& [id, r] : routes_) {
            const std::string prefix = "linear.r" + std::to_string(id);
            ts.push_back({prefix + ".weight", {uint32_t(r.out), uint32_t(r.in + 1)}, r.weight});
            ts.push_back({prefix + ".bias", {uint32_t(r.out)}, r.bias});
        }
        return ts;
    }

    std::vector<int> route_ids() const {
        std::vector<int> ids;
        for (const auto& [id, r] : routes_) ids.push_back(id);
        return ids;
    }

private:
    struct Route {
        int in = 0;
        int out = 0;
        std::vector<double> weight;  // out x (in + 1), last column multiplies t
        std::vector<double> bias;
    };

    const Route& route(int id, int in, int out) const {
        auto it = routes_.find(id);
        if (it == routes_.end() || it->second.in != in || it->second.out != out)
            throw DataError("model was built for a different task layout");
        return it->second;
    }

    static void forward_token(const Route& r, const double* x, double t, double* y) {
        for (int o = 0; o < r.out; ++o) {
            const double* row = r.weight.data() + size_t(o) * (r.in + 1);
            double acc = r.bias[o] + row[r.in] * t;
            for (int i = 0; i < r.in; ++i) acc += row[i] * x[i];
            y[o] = acc;
        }
    }

    std::map<int, Route> routes_;
};

// Two-layer tanh perceptron over single tokens: a shared "pretrained"
// base plus one LoRA pair per adapter route, mirroring how a frozen
// backbone is specialized per modality. With every B at zero the output
// is bit-identical to the base model.
class MlpVelocityModel : public TrainableVelocityModel {
public:
    struct Config {
        int hidden = 16;
        int lora_rank = 4;
        double lora_alpha = 4.0;
        bool train_base = false;  // LoRA-only optimization by default
        uint64_t init_seed = 7;
    };

    MlpVelocityModel(const TaskSpec& spec, const std::vector<LatentGrid>& example_zts,
                     const Config& cfg)
        : cfg_(cfg) {
        const AssembledTokens at = assemble_tokens(spec, example_zts);
        const auto dims = detail::route_dims(at);
        in_ = dims.begin()->second.in_channels;
        out_ = dims.begin()->second.out_channels;
        for (const auto& [id, d] : dims)
            if (d.in_channels != in_ || d.out_channels != out_)
                throw DataError("MlpVelocityModel requires equal channel counts across routes");

        Xoshiro256 rng(cfg.init_seed);
        auto randn = [&](std::vector<double>& v, double scale) {
            for (auto& x : v) x = rng.gaussian() * scale;
        };
        u_ = LoRALayer(cfg.hidden, in_ + 1, cfg.lora_rank, cfg.lora_alpha);
        v_ = LoRALayer(out_, cfg.hidden, cfg.lora_rank, cfg.lora_alpha);
        randn(u_.base, 0.5);
        randn(v_.base, 0.5);
        a_.assign(cfg.hidden, 0.0);
        c_.assign(out_, 0.0);
        for (const auto& [id, d] : dims) {
            RouteLora rl;
            rl.u = LoRALayer(cfg.hidden, in_ + 1, cfg.lora_rank, cfg.lora_alpha);
            rl.v = LoRALayer(out_, cfg.hidden, cfg.lora_rank, cfg.lora_alpha);
            randn(rl.u.A, 0.1);  // B stays zero: fresh adapters are no-ops
            randn(rl.v.A, 0.1);
            lora_[id] = std::move(rl);
        }
    }

    std::vector<std::vector<double>> predict(const AssembledTokens& at, double t) const override {
        std::vector<std::vector<double>> out(at.streams.size());
        std::vector<double> xt(in_ + 1), h(cfg_.hidden);
        for (size_t s = 0; s < at.streams.size(); ++s) {
            const auto& info = at.streams[s];
            const auto [wu, wv] = merged_route(info.route_id);
            const size_t n = at.tokens_per_stream();
            out[s].assign(n * out_, 0.0);
            for (size_t k = 0; k < n; ++k) {
                const double* x = at.stream_tokens[s].data() + k * in_;
                std::copy_n(x, in_, xt.begin());
                xt[in_] = t;
                for (int j = 0; j < cfg_.hidden; ++j) {
                    double acc = a_[j];
                    const double* row = wu.data() + size_t(j) * (in_ + 1);
                    for (int i = 0; i <= in_; ++i) acc += row[i] * xt[i];
                    h[j] = std::tanh(acc);
                }
                double* y = out[s].data() + k * out_;
                for (int o = 0; o < out_; ++o) {
                    double acc = c_[o];
                    const double* row = wv.data() + size_t(o) * cfg_.hidden;
                    for (int j = 0; j < cfg_.hidden; ++j) acc += row[j] * h[j];
                    y[o] = acc;
                }
            }
        }
        return out;
    }

    std::vector<double> params() const override {
        std::vector<double> p;
        auto append = [&](const std::vector<double>& v) { p.insert(p.end(), v.begin(), v.end()); };
        if (cfg_.train_base) {
            append(u_.base);
            append(a_);
            append(v_.base);
            append(c_);
        }
        for (const auto& [id, rl] : lora_) {
            append(rl.u.A);
            append(rl.u.B);
            append(rl.v.A);
            append(rl.v.B);
        }
        return p;
    }

    void set_params(const std::vector<double>& p) override {
        size_t off = 0;
        auto take = [&](std::vector<double>& v) {
            std::copy_n(p.begin() + off, v.size(), v.begin());
            off += v.size();
        };
        if (cfg_.train_base) {
            take(u_.base);
            take(a_);
            take(v_.base);
            take(c_);
        }
        for (auto& [id, rl] : lora_) {
            take(rl.u.A);
            take(rl.u.B);
            take(rl.v.A);
            take(rl.v.B);
        }
        if (off != p.size()) throw DataError("parameter vector size mismatch");
    }

    double loss_and_grad(const TaskSpec& spec, const FlowState& state,
                         std::vector<double>& grad) const override {
        const AssembledTokens at = assemble_tokens(spec, state.zts);
        const auto vels = detail::velocity_blocks(spec, state, at);
        const double inv_n = 1.0 / double(detail::masked_value_count(at));

        Grads g;
        g.du_base.assign(u_.base.size(), 0.0);
        g.da.assign(a_.size(), 0.0);
        g.dv_base.assign(v_.base.size(), 0.0);
        g.dc.assign(c_.size(), 0.0);
        for (const auto& [id, rl] : lora_) {
            RouteGrads rg;
            rg.du_merged.assign(u_.base.size(), 0.0);
            rg.dv_merged.assign(v_.base.size(), 0.0);
            g.routes[id] = std::move(rg);
        }

        double loss = 0.0;
        std::vector<double> xt(in_ + 1), h(cfg_.hidden), pre(cfg_.hidden), dy(out_),
            dh(cfg_.hidden);
        for (size_t s = 0; s < at.streams.size(); ++s) {
            const auto& info = at.streams[s];
            if (!info.is_target) continue;  // condition predictions never reach the loss
            const auto [wu, wv] = merged_route(info.route_id);
            RouteGrads& rg = g.routes[info.route_id];
            const size_t n = at.tokens_per_stream();
            for (size_t k = 0; k < n; ++k) {
                const double* x = at.stream_tokens[s].data() + k * in_;
                std::copy_n(x, in_, xt.begin());
                xt[in_] = state.t;
                for (int j = 0; j < cfg_.hidden; ++j) {
                    double acc = a_[j];
                    const double* row = wu.data() + size_t(j) * (in_ + 1);
                    for (int i = 0; i <= in_; ++i) acc += row[i] * xt[i];
                    h[j] = std::tanh(acc);
                    pre[j] = 1.0 - h[j] * h[j];
                }
                for (int o = 0; o < out_; ++o) {
                    double acc = c_[o];
                    const double* row = wv.data() + size_t(o) * cfg_.hidden;
                    for (int j = 0; j < cfg_.hidden; ++j) acc += row[j] * h[j];
                    const double diff = acc - vels[s][k * out_ + o];
                    loss += diff * diff * inv_n;
                    dy[o] = 2.0 * diff * inv_n;
                }
                for (int j = 0; j < cfg_.hidden; ++j) {
                    double acc = 0.0;
                    for (int o = 0; o < out_; ++o) acc += wv[size_t(o) * cfg_.hidden + j] * dy[o];
                    dh[j] = acc * pre[j];
                }
                for (int o = 0; o < out_; ++o) {
                    g.dc[o] += dy[o];
                    for (int j = 0; j < cfg_.hidden; ++j)
                        rg.dv_merged[size_t(o) * cfg_.hidden + j] += dy[o] * h[j];
                }
                for (int j = 0; j < cfg_.hidden; ++j) {
                    g.da[j] += dh[j];
                    for (int i = 0; i <= in_; ++i)
                        rg.du_merged[size_t(j) * (in_ + 1) + i] += dh[j] * xt[i];
                }
            }
        }

        // Merged-weight gradients flow to the base (sum over routes) and
        // through the LoRA factorization: dB = s * dW A^T, dA = s * B^T dW.
        grad.clear();
        if (cfg_.train_base) {
            std::vector<double> du_base(u_.base.size(), 0.0), dv_base(v_.base.size(), 0.0);
            for (const auto& [id, rg] : g.routes) {
                for (size_t i = 0; i < du_base.size(); ++i) du_base[i] += rg.du_merged[i];
                for (size_t i = 0; i < dv_base.size(); ++i) dv_base[i] += rg.dv_merged[i];
            }
            grad.insert(grad.end(), du_base.begin(), du_base.end());
            grad.insert(grad.end(), g.da.begin(), g.da.end());
            grad.insert(grad.end(), dv_base.begin(), dv_base.end());
            grad.insert(grad.end(), g.dc.begin(), g.dc.end());
        }
        for (const auto& [id, rl] : lora_) {
            const RouteGrads& rg = g.routes.at(id);
            append_lora_grads(rl.u, rg.du_merged, grad);
            append_lora_grads(rl.v, rg.dv_merged, grad);
        }
        return loss;
    }

    std::vector<NamedTensor> export_tensors() const override {
        std::vector<NamedTensor> ts;
        ts.push_back({"mlp.U.weight", {uint32_t(cfg_.hidden), uint32_t(in_ + 1)}, u_.base});
        ts.push_back({"mlp.U.bias", {uint32_t(cfg_.hidden)}, a_});
        ts.push_back({"mlp.V.weight", {uint32_t(out_), uint32_t(cfg_.hidden)}, v_.base});
        ts.push_back({"mlp.V.bias", {uint32_t(out_)}, c_});
        return ts;
    }

    // LoRA adapters as a standalone checkpoint, mergeable offline into the
    // base tensors via merge_lora_checkpoint.
    std::vector<NamedTensor> export_lora_tensors() const {
        std::vector<NamedTensor> ts;
        for (const auto& [id, rl] : lora_) {
            const std::string p = "mlp.r" + std::to_string(id);
            ts.push_back({p + ".U.A", {uint32_t(rl.u.rank), uint32_t(rl.u.d_in)}, rl.u.A});
            ts.push_back({p + ".U.B", {uint32_t(rl.u.d_out), uint32_t(rl.u.rank)}, rl.u.B});
            ts.push_back({p + ".U.alpha", {1}, {rl.u.alpha}});
            ts.push_back({p + ".V.A", {uint32_t(rl.v.rank), uint32_t(rl.v.d_in)}, rl.v.A});
            ts.push_back({p + ".V.B", {uint32_t(rl.v.d_out), uint32_t(rl.v.rank)}, rl.v.B});
            ts.push_back({p + ".V.alpha", {1}, {rl.v.alpha}});
        }
        return ts;
    }

    const LoRALayer& route_u(int id) const { return lora_.at(id).u; }
    const LoRALayer& route_v(int id) const { return lora_.at(id).v; }

    // True while every adapter is still a no-op (all B zero).
    bool adapters_are_identity() const {
        for (const auto& [id, rl] : lora_)
            if (!lora_is_identity(rl.u) || !lora_is_identity(rl.v)) return false;
        return true;
    }

private:
    struct RouteLora {
        LoRALayer u, v;
    };
    struct RouteGrads {
        std::vector<double> du_merged, dv_merged;
    };
    struct Grads {
        std::vector<double> du_base, da, dv_base, dc;
        std::map<int, RouteGrads> routes;
    };

    std::pair<std::vector<double>, std::vector<double>> merged_route(int id) const {
        auto it = lora_.find(id);
        if (it == lora_.end()) throw DataError("unknown adapter route " + std::to_string(id));
        LoRALayer u = it->second.u;
        u.base = u_.base;
        LoRALayer v = it->second.v;
        v.base = v_.base;
        return {merged_weight(u), merged_weight(v)};
    }

    static void append_lora_grads(const LoRALayer& l, const std::vector<double>& dw,
                                  std::vector<double>& grad) {
        const double s = l.scale();
        // dA = s * B^T dW
        for (int r = 0; r < l.rank; ++r)
            for (int i = 0; i < l.d_in; ++i) {
                double acc = 0.0;
                for (int o = 0; o < l.d_out; ++o)
                    acc += l.B[size_t(o) * l.rank + r] * dw[size_t(o) * l.d_in + i];
                grad.push_back(s * acc);
            }
        // dB = s * dW A^T
        for (int o = 0; o < l.d_out; ++o)
            for (int r = 0; r < l.rank; ++r) {
                double acc = 0.0;
                for (int i = 0; i < l.d_in; ++i)
                    acc += dw[size_t(o) * l.d_in + i] * l.A[size_t(r) * l.d_in + i];
                grad.push_back(s * acc);
            }
    }

    Config cfg_;
    int in_ = 0;
    int out_ = 0;
    LoRALayer u_, v_;  // base weights live in .base; A/B of these are unused
    std::vector<double> a_, c_;
    std::map<int, RouteLora> lora_;
};

}  // namespace panoforge::flow
