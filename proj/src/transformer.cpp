#include "mdseq/transformer.hpp"

#include <cmath>

namespace mdseq {

namespace {

// Row-wise softmax over the allowed prefix; masked entries are exactly
// zero so that masked positions cannot perturb downstream values even at
// the bit level.
MatrixXd causal_prefix_softmax(const MatrixXd& scores, bool causal) {
    const int rows = static_cast<int>(scores.rows());
    const int cols = static_cast<int>(scores.cols());
    MatrixXd p = MatrixXd::Zero(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const int last = causal ? std::min(i, cols - 1) : cols - 1;
        double m = scores(i, 0);
        for (int j = 1; j <= last; ++j) m = std::max(m, scores(i, j));
        double sum = 0.0;
        for (int j = 0; j <= last; ++j) {
            p(i, j) = std::exp(scores(i, j) - m);
            sum += p(i, j);
        }
        for (int j = 0; j <= last; ++j) p(i, j) /= sum;
    }
    return p;
}

struct AttnCache {
    MatrixXd X, Y;                 // query input, key/value input
    MatrixXd Q, K, V;              // L x d
    std::vector<MatrixXd> P;       // per head, post-softmax
    std::vector<MatrixXd> drop;    // keep-mask / (1-p); empty when dropout off
    MatrixXd Z;                    // concatenated head outputs, pre-merge
};

struct LnCache {
    MatrixXd xhat;
    VectorXd inv_std;
};

struct FfnCache {
    MatrixXd X, A;      // input and pre-activation
    MatrixXd drop;      // keep-mask / (1-p); empty when dropout off
    MatrixXd R;         // post-ReLU (and post-dropout) activations
};

MatrixXd attention_forward(const AttentionParams& p, const MatrixXd& X, const MatrixXd& Y,
                           bool causal, int n_heads, double dropout, Rng* rng,
                           AttnCache& cache) {
    const int d = static_cast<int>(X.cols());
    const int dk = d / n_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    cache.X = X;
    cache.Y = Y;
    cache.Q = X * p.wq.v;
    cache.K = Y * p.wk.v;
    cache.V = Y * p.wv.v;
    cache.Z.resize(X.rows(), d);
    cache.P.resize(n_heads);
    const bool use_dropout = dropout > 0.0 && rng != nullptr;
    if (use_dropout) cache.drop.resize(n_heads);

    for (int h = 0; h < n_heads; ++h) {
        const auto Qh = cache.Q.middleCols(h * dk, dk);
        const auto Kh = cache.K.middleCols(h * dk, dk);
        const auto Vh = cache.V.middleCols(h * dk, dk);
        const MatrixXd scores = Qh * Kh.transpose() * inv_sqrt_dk;
        cache.P[h] = causal_prefix_softmax(scores, causal);
        if (use_dropout) {
            MatrixXd& mask = cache.drop[h];
            mask.resize(scores.rows(), scores.cols());
            const double keep_scale = 1.0 / (1.0 - dropout);
            for (int i = 0; i < mask.rows(); ++i)
                for (int j = 0; j < mask.cols(); ++j)
                    mask(i, j) = rng->uniform() >= dropout ? keep_scale : 0.0;
            cache.Z.middleCols(h * dk, dk) = cache.P[h].cwiseProduct(mask) * Vh;
        } else {
            cache.Z.middleCols(h * dk, dk) = cache.P[h] * Vh;
        }
    }
    return cache.Z * p.wo.v;
}

// Accumulates input gradients into dX (query path) and dY (key/value path).
void attention_backward(AttentionParams& p, const AttnCache& cache, const MatrixXd& dout,
                        int n_heads, MatrixXd& dX, MatrixXd& dY) {
    const int d = static_cast<int>(cache.X.cols());
    const int dk = d / n_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    p.wo.g += cache.Z.transpose() * dout;
    const MatrixXd dZ = dout * p.wo.v.transpose();

    MatrixXd dQ(cache.Q.rows(), d), dK(cache.K.rows(), d), dV(cache.V.rows(), d);
    for (int h = 0; h < n_heads; ++h) {
        const auto Vh = cache.V.middleCols(h * dk, dk);
        const auto Qh = cache.Q.middleCols(h * dk, dk);
        const auto Kh = cache.K.middleCols(h * dk, dk);
        const auto dZh = dZ.middleCols(h * dk, dk);
        const MatrixXd& P = cache.P[h];

        MatrixXd dPdrop = dZh * Vh.transpose();
        if (!cache.drop.empty()) {
            dV.middleCols(h * dk, dk) = (P.cwiseProduct(cache.drop[h])).transpose() * dZh;
            dPdrop = dPdrop.cwiseProduct(cache.drop[h]);
        } else {
            dV.middleCols(h * dk, dk) = P.transpose() * dZh;
        }
        // softmax backward per row; masked entries have P = 0 and stay 0.
        MatrixXd dS(P.rows(), P.cols());
        for (int i = 0; i < P.rows(); ++i) {
            const double dot = P.row(i).dot(dPdrop.row(i));
            dS.row(i) = P.row(i).cwiseProduct(dPdrop.row(i).array().matrix() -
                                              RowVectorXd::Constant(P.cols(), dot));
        }
        dQ.middleCols(h * dk, dk) = dS * Kh * inv_sqrt_dk;
        dK.middleCols(h * dk, dk) = dS.transpose() * Qh * inv_sqrt_dk;
    }
    p.wq.g += cache.X.transpose() * dQ;
    p.wk.g += cache.Y.transpose() * dK;
    p.wv.g += cache.Y.transpose() * dV;
    dX += dQ * p.wq.v.transpose();
    dY += dK * p.wk.v.transpose() + dV * p.wv.v.transpose();
}

constexpr double kLnEps = 1e-5;

MatrixXd layer_norm_forward(const LayerNormParams& p, const MatrixXd& x, LnCache& cache) {
    const int d = static_cast<int>(x.cols());
    cache.xhat.resize(x.rows(), d);
    cache.inv_std.resize(x.rows());
    MatrixXd y(x.rows(), d);
    for (int i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        cache.inv_std(i) = inv;
        cache.xhat.row(i) = (x.row(i).array() - mean) * inv;
        y.row(i) = cache.xhat.row(i).cwiseProduct(p.gain.v.row(0)) + p.bias.v.row(0);
    }
    return y;
}

MatrixXd layer_norm_backward(LayerNormParams& p, const LnCache& cache, const MatrixXd& dy) {
    const int d = static_cast<int>(dy.cols());
    p.gain.g += (dy.cwiseProduct(cache.xhat)).colwise().sum();
    p.bias.g += dy.colwise().sum();
    MatrixXd dx(dy.rows(), d);
    for (int i = 0; i < dy.rows(); ++i) {
        const RowVectorXd dxhat = dy.row(i).cwiseProduct(p.gain.v.row(0));
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
        dx.row(i) = cache.inv_std(i) *
                    (dxhat.array() - m1 - cache.xhat.row(i).array() * m2).matrix();
    }
    return dx;
}

MatrixXd ffn_forward(const FfnParams& p, const MatrixXd& x, double dropout, Rng* rng,
                     FfnCache& cache) {
    cache.X = x;
    cache.A = x * p.w1.v + p.b1.v.replicate(x.rows(), 1);
    cache.R = cache.A.cwiseMax(0.0);
    if (dropout > 0.0 && rng != nullptr) {
        cache.drop.resize(cache.R.rows(), cache.R.cols());
        const double keep_scale = 1.0 / (1.0 - dropout);
        for (int i = 0; i < cache.drop.rows(); ++i)
            for (int j = 0; j < cache.drop.cols(); ++j)
                cache.drop(i, j) = rng->uniform() >= dropout ? keep_scale : 0.0;
        cache.R = cache.R.cwiseProduct(cache.drop);
    }
    return cache.R * p.w2.v + p.b2.v.replicate(x.rows(), 1);
}

MatrixXd ffn_backward(FfnParams& p, const FfnCache& cache, const MatrixXd& dout) {
    p.w2.g += cache.R.transpose() * dout;
    p.b2.g += dout.colwise().sum();
    MatrixXd dR = dout * p.w2.v.transpose();
    if (cache.drop.size() > 0) dR = dR.cwiseProduct(cache.drop);
    const MatrixXd dA = dR.cwiseProduct((cache.A.array() > 0.0).cast<double>().matrix());
    p.w1.g += cache.X.transpose() * dA;
    p.b1.g += dA.colwise().sum();
    return dA * p.w1.v.transpose();
}

}  // namespace

MatrixXd scaled_attention(const MatrixXd& Q, const MatrixXd& K, const MatrixXd& V,
                          AttnMask mask) {
    require(Q.cols() == K.cols(), "scaled_attention: Q/K inner dimensions disagree");
    require(K.rows() == V.rows(), "scaled_attention: K/V row counts disagree");
    const double inv = 1.0 / std::sqrt(static_cast<double>(K.cols()));
    const MatrixXd scores = Q * K.transpose() * inv;
    return causal_prefix_softmax(scores, mask == AttnMask::causal) * V;
}

MatrixXd scaled_attention(const MatrixXd& Q, const MatrixXd& K, const MatrixXd& V,
                          const std::vector<std::vector<bool>>& allowed) {
    require(Q.cols() == K.cols(), "scaled_attention: Q/K inner dimensions disagree");
    require(K.rows() == V.rows(), "scaled_attention: K/V row counts disagree");
    require(static_cast<int>(allowed.size()) == Q.rows(), "scaled_attention: mask rows mismatch");
    const double inv = 1.0 / std::sqrt(static_cast<double>(K.cols()));
    const MatrixXd scores = Q * K.transpose() * inv;
    MatrixXd p = MatrixXd::Zero(scores.rows(), scores.cols());
    for (int i = 0; i < scores.rows(); ++i) {
        require(static_cast<int>(allowed[i].size()) == K.rows(),
                "scaled_attention: mask cols mismatch");
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < scores.cols(); ++j)
            if (allowed[i][j]) m = std::max(m, scores(i, j));
        require(std::isfinite(m), "scaled_attention: fully masked row " + std::to_string(i) +
                                      " cannot be normalized");
        double sum = 0.0;
        for (int j = 0; j < scores.cols(); ++j)
            if (allowed[i][j]) {
                p(i, j) = std::exp(scores(i, j) - m);
                sum += p(i, j);
            }
        for (int j = 0; j < scores.cols(); ++j) p(i, j) /= sum;
    }
    return p * V;
}

MatrixXd ffn_apply(const MatrixXd& z, const MatrixXd& w1, const RowVectorXd& b1,
                   const MatrixXd& w2, const RowVectorXd& b2) {
    const MatrixXd a = (z * w1 + b1.replicate(z.rows(), 1)).cwiseMax(0.0);
    return a * w2 + b2.replicate(z.rows(), 1);
}

MatrixXd sinusoidal_positions(int max_len, int d_model) {
    MatrixXd p(max_len, d_model);
    for (int pos = 0; pos < max_len; ++pos)
        for (int i = 0; i < d_model; i += 2) {
            const double angle = pos / std::pow(10000.0, static_cast<double>(i) / d_model);
            p(pos, i) = std::sin(angle);
            if (i + 1 < d_model) p(pos, i + 1) = std::cos(angle);
        }
    return p;
}

struct TransformerModel::Workspace {
    struct EncLayer {
        AttnCache attn;
        LnCache ln1;
        FfnCache ffn;
        LnCache ln2;
        MatrixXd ln1_out;
    };
    struct DecLayer {
        AttnCache self;
        LnCache ln1;
        AttnCache cross;
        LnCache ln2;
        FfnCache ffn;
        LnCache ln3;
        MatrixXd ln1_out, ln2_out;
    };
    MatrixXd enc_out, dec_out;
    std::vector<EncLayer> enc;
    std::vector<DecLayer> dec;
};

namespace {

void init_attention(AttentionParams& a, const std::string& prefix, int d, Rng& rng) {
    a.wq.resize(prefix + ".wq", d, d);
    a.wk.resize(prefix + ".wk", d, d);
    a.wv.resize(prefix + ".wv", d, d);
    a.wo.resize(prefix + ".wo", d, d);
    a.wq.init_uniform(rng);
    a.wk.init_uniform(rng);
    a.wv.init_uniform(rng);
    a.wo.init_uniform(rng);
}

void init_layer_norm(LayerNormParams& ln, const std::string& prefix, int d) {
    ln.gain.resize(prefix + ".gain", 1, d);
    ln.bias.resize(prefix + ".bias", 1, d);
    ln.gain.v.setOnes();
}

void init_ffn(FfnParams& f, const std::string& prefix, int d, int d_ff, Rng& rng) {
    f.w1.resize(prefix + ".w1", d, d_ff);
    f.b1.resize(prefix + ".b1", 1, d_ff);
    f.w2.resize(prefix + ".w2", d_ff, d);
    f.b2.resize(prefix + ".b2", 1, d);
    f.w1.init_uniform(rng);
    f.w2.init_uniform(rng);
}

}  // namespace

TransformerModel::TransformerModel(const TransformerConfig& cfg, Rng& rng) : cfg_(cfg) {
    require(cfg.vocab >= 2, "TransformerModel: vocab must be >= 2");
    require(cfg.d_model % cfg.n_heads == 0,
            "TransformerModel: d_model must be divisible by n_heads");
    require(cfg.d_model % 2 == 0, "TransformerModel: d_model must be even");
    require(cfg.n_layers >= 1 && cfg.max_len >= 2, "TransformerModel: bad layer/length config");
    require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "TransformerModel: dropout out of range");

    embed.resize("embed", cfg.vocab, cfg.d_model);
    embed.init_uniform(rng);
    encoder.resize(cfg.n_layers);
    decoder.resize(cfg.n_layers);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string ep = "enc" + std::to_string(l);
        init_attention(encoder[l].attn, ep + ".attn", cfg.d_model, rng);
        init_layer_norm(encoder[l].ln1, ep + ".ln1", cfg.d_model);
        init_ffn(encoder[l].ffn, ep + ".ffn", cfg.d_model, cfg.d_ff, rng);
        init_layer_norm(encoder[l].ln2, ep + ".ln2", cfg.d_model);
        const std::string dp = "dec" + std::to_string(l);
        init_attention(decoder[l].self_attn, dp + ".self", cfg.d_model, rng);
        init_layer_norm(decoder[l].ln1, dp + ".ln1", cfg.d_model);
        init_attention(decoder[l].cross_attn, dp + ".cross", cfg.d_model, rng);
        init_layer_norm(decoder[l].ln2, dp + ".ln2", cfg.d_model);
        init_ffn(decoder[l].ffn, dp + ".ffn", cfg.d_model, cfg.d_ff, rng);
        init_layer_norm(decoder[l].ln3, dp + ".ln3", cfg.d_model);
    }
    w_proj.resize("w_proj", cfg.d_model, cfg.vocab);
    b_proj.resize("b_proj", 1, cfg.vocab);
    w_proj.init_uniform(rng);
    positions_ = sinusoidal_positions(cfg.max_len, cfg.d_model);
}

std::vector<Param*> TransformerModel::params() {
    std::vector<Param*> out = {&embed};
    for (auto& l : encoder) {
        for (Param* p : {&l.attn.wq, &l.attn.wk, &l.attn.wv, &l.attn.wo, &l.ln1.gain,
                         &l.ln1.bias, &l.ffn.w1, &l.ffn.b1, &l.ffn.w2, &l.ffn.b2, &l.ln2.gain,
                         &l.ln2.bias})
            out.push_back(p);
    }
    for (auto& l : decoder) {
        for (Param* p : {&l.self_attn.wq, &l.self_attn.wk, &l.self_attn.wv, &l.self_attn.wo,
                         &l.ln1.gain, &l.ln1.bias, &l.cross_attn.wq, &l.cross_attn.wk,
                         &l.cross_attn.wv, &l.cross_attn.wo, &l.ln2.gain, &l.ln2.bias,
                         &l.ffn.w1, &l.ffn.b1, &l.ffn.w2, &l.ffn.b2, &l.ln3.gain, &l.ln3.bias})
            out.push_back(p);
    }
    out.push_back(&w_proj);
    out.push_back(&b_proj);
    return out;
}

void TransformerModel::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

MatrixXd TransformerModel::run_forward(const std::vector<int>& tokens, Rng* rng,
                                       Workspace* ws) const {
    const int L = static_cast<int>(tokens.size());
    require(L >= 1, "transformer: empty input");
    require(L <= cfg_.max_len, "transformer: sequence longer than the position table (" +
                                   std::to_string(cfg_.max_len) + ")");
    for (int t : tokens) require(t >= 0 && t < cfg_.vocab, "transformer: token out of vocabulary");

    Workspace local;
    Workspace& w = ws ? *ws : local;
    w.enc.resize(cfg_.n_layers);
    w.dec.resize(cfg_.n_layers);

    MatrixXd enc_h(L, cfg_.d_model);
    for (int t = 0; t < L; ++t) enc_h.row(t) = embed.v.row(tokens[t]) + positions_.row(t);

    // Right-shifted decoder input: position 0 carries no token embedding.
    MatrixXd dec_h(L, cfg_.d_model);
    dec_h.row(0) = positions_.row(0);
    for (int t = 1; t < L; ++t) dec_h.row(t) = embed.v.row(tokens[t - 1]) + positions_.row(t);

    const bool enc_causal = cfg_.unidirectional;
    for (int l = 0; l < cfg_.n_layers; ++l) {
        auto& cache = w.enc[l];
        const auto& p = encoder[l];
        const MatrixXd a =
            attention_forward(p.attn, enc_h, enc_h, enc_causal, cfg_.n_heads, cfg_.dropout,
                              rng, cache.attn);
        cache.ln1_out = layer_norm_forward(p.ln1, enc_h + a, cache.ln1);
        const MatrixXd f = ffn_forward(p.ffn, cache.ln1_out, cfg_.dropout, rng, cache.ffn);
        enc_h = layer_norm_forward(p.ln2, cache.ln1_out + f, cache.ln2);
    }
    w.enc_out = enc_h;

    for (int l = 0; l < cfg_.n_layers; ++l) {
        auto& cache = w.dec[l];
        const auto& p = decoder[l];
        const MatrixXd a = attention_forward(p.self_attn, dec_h, dec_h, /*causal=*/true,
                                             cfg_.n_heads, cfg_.dropout, rng, cache.self);
        cache.ln1_out = layer_norm_forward(p.ln1, dec_h + a, cache.ln1);
        // Cross-attention stays causal in both modes; the directionality
        // switch lives in the encoder mask.
        const MatrixXd c = attention_forward(p.cross_attn, cache.ln1_out, w.enc_out,
                                             /*causal=*/true, cfg_.n_heads, cfg_.dropout, rng,
                                             cache.cross);
        cache.ln2_out = layer_norm_forward(p.ln2, cache.ln1_out + c, cache.ln2);
        const MatrixXd f = ffn_forward(p.ffn, cache.ln2_out, cfg_.dropout, rng, cache.ffn);
        dec_h = layer_norm_forward(p.ln3, cache.ln2_out + f, cache.ln3);
    }
    w.dec_out = dec_h;

    MatrixXd logits = dec_h * w_proj.v + b_proj.v.replicate(L, 1);
    require(logits.allFinite(), "transformer: non-finite logits");
    return logits;
}

MatrixXd TransformerModel::forward(const std::vector<int>& tokens) const {
    return run_forward(tokens, nullptr, nullptr);
}

double TransformerModel::loss(const std::vector<int>& tokens) const {
    const int L = static_cast<int>(tokens.size());
    require(L >= 2, "transformer loss: need at least 2 tokens");
    const MatrixXd logits = run_forward(tokens, nullptr, nullptr);
    MatrixXd scratch;
    std::vector<int> targets(tokens.begin() + 1, tokens.end());
    return cross_entropy_rows(logits.topRows(L - 1), targets, static_cast<double>(L - 1),
                              scratch);
}

double TransformerModel::loss_and_grad(const std::vector<int>& tokens, double weight,
                                       Rng* dropout_rng) {
    const int L = static_cast<int>(tokens.size());
    require(L >= 2, "transformer loss: need at least 2 tokens");

    Workspace ws;
    const MatrixXd logits = run_forward(tokens, dropout_rng, &ws);

    std::vector<int> targets(tokens.begin() + 1, tokens.end());
    MatrixXd dtop;
    const double loss =
        cross_entropy_rows(logits.topRows(L - 1), targets, (L - 1) / weight, dtop);
    require(std::isfinite(loss), "transformer: non-finite loss");
    MatrixXd dlogits = MatrixXd::Zero(L, cfg_.vocab);
    dlogits.topRows(L - 1) = dtop;

    w_proj.g += ws.dec_out.transpose() * dlogits;
    b_proj.g += dlogits.colwise().sum();
    MatrixXd g = dlogits * w_proj.v.transpose();

    MatrixXd d_enc = MatrixXd::Zero(L, cfg_.d_model);
    for (int l = cfg_.n_layers - 1; l >= 0; --l) {
        auto& cache = ws.dec[l];
        auto& p = decoder[l];
        const MatrixXd d3 = layer_norm_backward(p.ln3, cache.ln3, g);
        const MatrixXd dffn = ffn_backward(p.ffn, cache.ffn, d3);
        const MatrixXd d2 = layer_norm_backward(p.ln2, cache.ln2, d3 + dffn);
        MatrixXd d_cross_q = MatrixXd::Zero(L, cfg_.d_model);
        attention_backward(p.cross_attn, cache.cross, d2, cfg_.n_heads, d_cross_q, d_enc);
        const MatrixXd d1 = layer_norm_backward(p.ln1, cache.ln1, d2 + d_cross_q);
        MatrixXd d_self_q = MatrixXd::Zero(L, cfg_.d_model);
        MatrixXd d_self_kv = MatrixXd::Zero(L, cfg_.d_model);
        attention_backward(p.self_attn, cache.self, d1, cfg_.n_heads, d_self_q, d_self_kv);
        g = d1 + d_self_q + d_self_kv;
    }
    // g now holds the decoder-input gradient; scatter into embeddings
    // (the shifted slot 0 carries no token).
    for (int t = 1; t < L; ++t) embed.g.row(tokens[t - 1]) += g.row(t);

    MatrixXd ge = d_enc;
    for (int l = cfg_.n_layers - 1; l >= 0; --l) {
        auto& cache = ws.enc[l];
        auto& p = encoder[l];
        const MatrixXd d2 = layer_norm_backward(p.ln2, cache.ln2, ge);
        const MatrixXd dffn = ffn_backward(p.ffn, cache.ffn, d2);
        const MatrixXd d1 = layer_norm_backward(p.ln1, cache.ln1, d2 + dffn);
        MatrixXd d_q = MatrixXd::Zero(L, cfg_.d_model);
        MatrixXd d_kv = MatrixXd::Zero(L, cfg_.d_model);
        attention_backward(p.attn, cache.attn, d1, cfg_.n_heads, d_q, d_kv);
        ge = d1 + d_q + d_kv;
    }
    for (int t = 0; t < L; ++t) embed.g.row(tokens[t]) += ge.row(t);

    return loss;
}

}  // namespace mdseq
