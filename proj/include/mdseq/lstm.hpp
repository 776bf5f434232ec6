#pragma once

#include <vector>

#include "mdseq/nn.hpp"

namespace mdseq {

struct LstmConfig {
    int vocab = 0;
    int embed_dim = 128;
    int hidden_dim = 1024;
};

/// Hidden and cell state for a batch of sequences, one row each.
struct LstmState {
    MatrixXd h;
    MatrixXd c;
};

/// Next-state language model: embedding, a single LSTM layer and a linear
/// projection to vocab logits. Matrices follow the x*W row convention, so
/// input weights are E x H, recurrent weights H x H.
class LstmModel {
public:
    LstmModel(const LstmConfig& cfg, Rng& init_rng);

    const LstmConfig& config() const { return cfg_; }
    int vocab_size() const { return cfg_.vocab; }
    std::vector<Param*> params();
    std::vector<const Param*> params() const;
    void zero_grad();

    LstmState zero_state(int batch_rows) const;

    /// One cell update for a batch of embedded inputs (rows).
    /// f,i,o = sigmoid(x W + h U + b); cbar = tanh(...);
    /// c = f.c_prev + i.cbar; h = o.tanh(c).
    LstmState step(const MatrixXd& x_embedded, const LstmState& prev) const;

    /// Full forward over equal-length token windows (one per batch row).
    /// logits[t] is rows x vocab; logits[t] scores the token following
    /// position t. Also returns the final state for stateful continuation.
    struct Forward {
        std::vector<MatrixXd> logits;
        LstmState final_state;
    };
    Forward forward(const std::vector<std::vector<int>>& tokens, const LstmState& init) const;

    /// Mean next-token cross-entropy over the within-window shifted pairs
    /// (positions 0..L-2), averaged over rows and pairs, with exact
    /// reverse-mode gradients accumulated into the parameter grads.
    /// Backpropagation truncates at the window boundary; the carried state
    /// value still flows forward.
    double loss_and_grad(const std::vector<std::vector<int>>& tokens, const LstmState& init,
                         LstmState* final_state = nullptr);

    /// Mean next-token cross-entropy only (no gradients).
    double loss(const std::vector<std::vector<int>>& tokens, const LstmState& init,
                LstmState* final_state = nullptr) const;

    /// Single-token incremental step used by autoregressive generation:
    /// consumes one token per row, returns logits for the next one.
    MatrixXd step_tokens(const std::vector<int>& tokens, LstmState& state) const;

    Param embed;                    // V x E
    Param w_f, w_i, w_o, w_c;       // E x H
    Param u_f, u_i, u_o, u_c;       // H x H
    Param b_f, b_i, b_o, b_c;       // 1 x H
    Param w_out;                    // H x V
    Param b_out;                    // 1 x V

private:
    struct StepCache {
        MatrixXd x, f, i, o, cbar, c_prev, c, tanh_c, h_prev;
    };
    StepCache step_cached(const MatrixXd& x_embedded, const LstmState& prev) const;

    LstmConfig cfg_;
};

}  // namespace mdseq
