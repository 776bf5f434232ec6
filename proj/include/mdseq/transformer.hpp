#pragma once

#include <optional>
#include <vector>

#include "mdseq/nn.hpp"

namespace mdseq {

struct TransformerConfig {
    int vocab = 0;
    int d_model = 512;
    int n_heads = 8;
    int d_ff = 2048;
    int n_layers = 2;  // encoder stacks; the decoder mirrors the count
    double dropout = 0.1;
    int max_len = 512;
    bool unidirectional = true;  // toggles the encoder self-attention mask only
};

enum class AttnMask { none, causal };

/// Row-wise softmax(Q K^T / sqrt(d_k)) V with masked positions excluded
/// before normalization. A row whose positions are all masked cannot be
/// normalized and raises an error.
MatrixXd scaled_attention(const MatrixXd& Q, const MatrixXd& K, const MatrixXd& V, AttnMask mask);
MatrixXd scaled_attention(const MatrixXd& Q, const MatrixXd& K, const MatrixXd& V,
                          const std::vector<std::vector<bool>>& allowed);

/// max(0, Z W1 + b1) W2 + b2.
MatrixXd ffn_apply(const MatrixXd& z, const MatrixXd& w1, const RowVectorXd& b1,
                   const MatrixXd& w2, const RowVectorXd& b2);

/// Sinusoidal position table, rows 0..max_len-1.
MatrixXd sinusoidal_positions(int max_len, int d_model);

struct AttentionParams {
    Param wq, wk, wv, wo;  // each d_model x d_model
};
struct LayerNormParams {
    Param gain, bias;  // 1 x d_model
};
struct FfnParams {
    Param w1, b1, w2, b2;
};
struct EncoderLayerParams {
    AttentionParams attn;
    LayerNormParams ln1;
    FfnParams ffn;
    LayerNormParams ln2;
};
struct DecoderLayerParams {
    AttentionParams self_attn;
    LayerNormParams ln1;
    AttentionParams cross_attn;
    LayerNormParams ln2;
    FfnParams ffn;
    LayerNormParams ln3;
};

/// Encoder-decoder next-state model. The encoder reads the token window
/// (causally masked in unidirectional mode, unmasked in bidirectional
/// mode); the decoder reads the right-shifted window with causal
/// self-attention and causally masked cross-attention against the encoder
/// output. logits(t) scores the token following position t, matching the
/// LSTM convention, so in unidirectional mode position t never sees
/// positions beyond t.
class TransformerModel {
public:
    TransformerModel(const TransformerConfig& cfg, Rng& init_rng);

    const TransformerConfig& config() const { return cfg_; }
    int vocab_size() const { return cfg_.vocab; }
    std::vector<Param*> params();
    void zero_grad();

    /// Evaluation-mode logits (dropout off), L x vocab.
    MatrixXd forward(const std::vector<int>& tokens) const;

    /// Mean next-token cross-entropy over within-window pairs; exact
    /// reverse-mode gradients accumulated into parameter grads, scaled by
    /// `weight` (use 1/batch for batch averaging). Dropout active when a
    /// rng is supplied.
    double loss_and_grad(const std::vector<int>& tokens, double weight = 1.0,
                         Rng* dropout_rng = nullptr);

    double loss(const std::vector<int>& tokens) const;

    Param embed;   // V x d_model, shared by encoder and decoder inputs
    Param w_proj;  // d_model x V
    Param b_proj;  // 1 x V
    std::vector<EncoderLayerParams> encoder;
    std::vector<DecoderLayerParams> decoder;

private:
    struct Workspace;  // forward caches for the backward pass
    MatrixXd run_forward(const std::vector<int>& tokens, Rng* dropout_rng, Workspace* ws) const;

    TransformerConfig cfg_;
    MatrixXd positions_;  // max_len x d_model, fixed
};

}  // namespace mdseq
