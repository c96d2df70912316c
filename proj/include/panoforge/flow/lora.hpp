#pragma once

#include <vector>

#include "panoforge/common.hpp"

namespace panoforge::flow {

// y = W0 x + (alpha/rank) * B (A x). B is zero-initialized so a freshly
// attached adapter leaves the base output untouched.
struct LoRALayer {
    int d_out = 0;
    int d_in = 0;
    int rank = 0;
    double alpha = 1.0;
    std::vector<double> base;  // d_out x d_in, row-major
    std::vector<double> A;     // rank x d_in
    std::vector<double> B;     // d_out x rank

    LoRALayer() = default;
    LoRALayer(int d_out_, int d_in_, int rank_, double alpha_)
        : d_out(d_out_),
          d_in(d_in_),
          rank(rank_),
          alpha(alpha_),
          base(size_t(d_out_) * d_in_, 0.0),
          A(size_t(rank_) * d_in_, 0.0),
          B(size_t(d_out_) * rank_, 0.0) {
        if (d_out < 1 || d_in < 1 || rank < 1) throw DataError("LoRALayer dims must be >= 1");
    }

    double scale() const { return alpha / double(rank); }
};

inline void lora_forward(const LoRALayer& l, const double* x, double* y) {
    for (int o = 0; o < l.d_out; ++o) {
        double acc = 0.0;
        const double* row = l.base.data() + size_t(o) * l.d_in;
        for (int i = 0; i < l.d_in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
    std::vector<double> ax(l.rank, 0.0);
    for (int r = 0; r < l.rank; ++r) {
        double acc = 0.0;
        const double* row = l.A.data() + size_t(r) * l.d_in;
        for (int i = 0; i < l.d_in; ++i) acc += row[i] * x[i];
        ax[r] = acc;
    }
    const double s = l.scale();
    for (int o = 0; o < l.d_out; ++o) {
        double acc = 0.0;
        const double* row = l.B.data() + size_t(o) * l.rank;
        for (int r = 0; r < l.rank; ++r) acc += row[r] * ax[r];
        y[o] += s * acc;
    }
}

inline std::vector<double> lora_forward(const LoRALayer& l, const std::vector<double>& x) {
    if (int(x.size()) != l.d_in) throw DataError("lora_forward: input dimension mismatch");
    std::vector<double> y(l.d_out, 0.0);
    lora_forward(l, x.data(), y.data());
    return y;
}

// W0 + (alpha/rank) B A, the offline-merged weight.
inline std::vector<double> merged_weight(const LoRALayer& l) {
    std::vector<double> w = l.base;
    const double s = l.scale();
    for (int o = 0; o < l.d_out; ++o)
        for (int i = 0; i < l.d_in; ++i) {
            double acc = 0.0;
            for (int r = 0; r < l.rank; ++r)
                acc += l.B[size_t(o) * l.rank + r] * l.A[size_t(r) * l.d_in + i];
            w[size_t(o) * l.d_in + i] += s * acc;
        }
    return w;
}

inline bool lora_is_identity(const LoRALayer& l) {
    for (double b : l.B)
        if (b != 0.0) return false;
    return true;
}

}  // namespace panoforge::flow
