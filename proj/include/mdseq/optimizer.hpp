#pragma once

#include <cmath>
#include <vector>

#include "mdseq/nn.hpp"

namespace mdseq {

/// Warmup schedule: lrate = d_model^-0.5 * min(step^-0.5, step * warmup^-1.5).
/// Rises linearly for the first `warmup` steps, then decays as 1/sqrt(step).
inline double noam_lr(long step, int d_model, int warmup) {
    require(step >= 1, "noam_lr: step must be >= 1");
    require(d_model >= 1 && warmup >= 1, "noam_lr: bad d_model/warmup");
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(warmup);
    return std::pow(static_cast<double>(d_model), -0.5) *
           std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-9;
};

/// First/second moment estimates per parameter plus the step counter.
struct AdamState {
    long step = 0;
    std::vector<MatrixXd> m;
    std::vector<MatrixXd> v;

    void init(const std::vector<Param*>& params) {
        step = 0;
        m.clear();
        v.clear();
        for (const Param* p : params) {
            m.push_back(MatrixXd::Zero(p->v.rows(), p->v.cols()));
            v.push_back(MatrixXd::Zero(p->v.rows(), p->v.cols()));
        }
    }
};

/// Bias-corrected Adam update at the given learning rate.
inline void adam_step(const std::vector<Param*>& params, AdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
    require(params.size() == state.m.size(), "adam_step: state does not match parameters");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = *params[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * p.g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * p.g.cwiseProduct(p.g);
        const MatrixXd mhat = state.m[i] / bc1;
        const MatrixXd vhat = state.v[i] / bc2;
        p.v -= lr * (mhat.array() / (vhat.array().sqrt() + cfg.eps)).matrix();
    }
}

}  // namespace mdseq
