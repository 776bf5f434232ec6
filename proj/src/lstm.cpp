#include "mdseq/lstm.hpp"

#include <cmath>

namespace mdseq {

namespace {

inline MatrixXd sigmoid(const MatrixXd& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

MatrixXd embed_rows(const Param& embed, const std::vector<std::vector<int>>& tokens, int t) {
    const int rows = static_cast<int>(tokens.size());
    MatrixXd x(rows, embed.v.cols());
    for (int r = 0; r < rows; ++r) {
        const int tok = tokens[r][t];
        require(tok >= 0 && tok < embed.v.rows(), "lstm: token out of vocabulary");
        x.row(r) = embed.v.row(tok);
    }
    return x;
}

}  // namespace

LstmModel::LstmModel(const LstmConfig& cfg, Rng& rng) : cfg_(cfg) {
    require(cfg.vocab >= 2, "LstmModel: vocab must be >= 2");
    require(cfg.embed_dim >= 1 && cfg.hidden_dim >= 1, "LstmModel: bad dimensions");
    const int V = cfg.vocab, E = cfg.embed_dim, H = cfg.hidden_dim;
    embed.resize("embed", V, E);
    w_f.resize("w_f", E, H);
    w_i.resize("w_i", E, H);
    w_o.resize("w_o", E, H);
    w_c.resize("w_c", E, H);
    u_f.resize("u_f", H, H);
    u_i.resize("u_i", H, H);
    u_o.resize("u_o", H, H);
    u_c.resize("u_c", H, H);
    b_f.resize("b_f", 1, H);
    b_i.resize("b_i", 1, H);
    b_o.resize("b_o", 1, H);
    b_c.resize("b_c", 1, H);
    w_out.resize("w_out", H, V);
    b_out.resize("b_out", 1, V);
    for (Param* p : {&embed, &w_f, &w_i, &w_o, &w_c, &u_f, &u_i, &u_o, &u_c, &w_out})
        p->init_uniform(rng);
    // biases stay zero
}

std::vector<Param*> LstmModel::params() {
    return {&embed, &w_f, &w_i, &w_o, &w_c, &u_f, &u_i, &u_o, &u_c,
            &b_f,   &b_i, &b_o, &b_c, &w_out, &b_out};
}

std::vector<const Param*> LstmModel::params() const {
    auto mut = const_cast<LstmModel*>(this)->params();
    return std::vector<const Param*>(mut.begin(), mut.end());
}

void LstmModel::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

LstmState LstmModel::zero_state(int batch_rows) const {
    LstmState s;
    s.h = MatrixXd::Zero(batch_rows, cfg_.hidden_dim);
    s.c = MatrixXd::Zero(batch_rows, cfg_.hidden_dim);
    return s;
}

LstmModel::StepCache LstmModel::step_cached(const MatrixXd& x, const LstmState& prev) const {
    StepCache cache;
    cache.x = x;
    cache.h_prev = prev.h;
    cache.c_prev = prev.c;
    const MatrixXd bf = b_f.v.replicate(x.rows(), 1);
    const MatrixXd bi = b_i.v.replicate(x.rows(), 1);
    const MatrixXd bo = b_o.v.replicate(x.rows(), 1);
    const MatrixXd bc = b_c.v.replicate(x.rows(), 1);
    cache.f = sigmoid(x * w_f.v + prev.h * u_f.v + bf);
    cache.i = sigmoid(x * w_i.v + prev.h * u_i.v + bi);
    cache.o = sigmoid(x * w_o.v + prev.h * u_o.v + bo);
    cache.cbar = (x * w_c.v + prev.h * u_c.v + bc).array().tanh().matrix();
    cache.c = cache.f.cwiseProduct(prev.c) + cache.i.cwiseProduct(cache.cbar);
    cache.tanh_c = cache.c.array().tanh().matrix();
    return cache;
}

LstmState LstmModel::step(const MatrixXd& x, const LstmState& prev) const {
    const StepCache cache = step_cached(x, prev);
    LstmState next;
    next.c = cache.c;
    next.h = cache.o.cwiseProduct(cache.tanh_c);
    return next;
}

LstmModel::Forward LstmModel::forward(const std::vector<std::vector<int>>& tokens,
                                      const LstmState& init) const {
    require(!tokens.empty() && !tokens.front().empty(), "lstm forward: empty input");
    const int L = static_cast<int>(tokens.front().size());
    for (const auto& row : tokens)
        require(static_cast<int>(row.size()) == L, "lstm forward: ragged token windows");

    Forward out;
    LstmState state = init;
    for (int t = 0; t < L; ++t) {
        const MatrixXd x = embed_rows(embed, tokens, t);
        state = step(x, state);
        require(state.h.allFinite(), "lstm forward: non-finite activation at step " +
                                         std::to_string(t));
        out.logits.push_back(state.h * w_out.v + b_out.v.replicate(state.h.rows(), 1));
    }
    out.final_state = state;
    return out;
}

double LstmModel::loss(const std::vector<std::vector<int>>& tokens, const LstmState& init,
                       LstmState* final_state) const {
    const Forward fwd = forward(tokens, init);
    const int rows = static_cast<int>(tokens.size());
    const int L = static_cast<int>(tokens.front().size());
    require(L >= 2, "lstm loss: windows must hold at least 2 tokens");
    const double scale = static_cast<double>(rows) * (L - 1);
    double total = 0.0;
    MatrixXd scratch;
    for (int t = 0; t + 1 < L; ++t) {
        std::vector<int> targets(rows);
        for (int r = 0; r < rows; ++r) targets[r] = tokens[r][t + 1];
        total += cross_entropy_rows(fwd.logits[t], targets, scale, scratch);
    }
    if (final_state) *final_state = fwd.final_state;
    return total;
}

double LstmModel::loss_and_grad(const std::vector<std::vector<int>>& tokens,
                                const LstmState& init, LstmState* final_state) {
    require(!tokens.empty() && !tokens.front().empty(), "lstm loss: empty input");
    const int rows = static_cast<int>(tokens.size());
    const int L = static_cast<int>(tokens.front().size());
    require(L >= 2, "lstm loss: windows must hold at least 2 tokens");
    for (const auto& row : tokens)
        require(static_cast<int>(row.size()) == L, "lstm loss: ragged token windows");

    std::vector<StepCache> caches;
    caches.reserve(L);
    std::vector<MatrixXd> dlogits(L);
    LstmState state = init;
    const double scale = static_cast<double>(rows) * (L - 1);
    double total_loss = 0.0;

    for (int t = 0; t < L; ++t) {
        const MatrixXd x = embed_rows(embed, tokens, t);
        caches.push_back(step_cached(x, state));
        const StepCache& cc = caches.back();
        state.c = cc.c;
        state.h = cc.o.cwiseProduct(cc.tanh_c);
        require(state.h.allFinite(),
                "lstm: non-finite activation at step " + std::to_string(t));
        if (t + 1 < L) {
            const MatrixXd logits = state.h * w_out.v + b_out.v.replicate(rows, 1);
            std::vector<int> targets(rows);
            for (int r = 0; r < rows; ++r) targets[r] = tokens[r][t + 1];
            total_loss += cross_entropy_rows(logits, targets, scale, dlogits[t]);
        }
    }
    if (final_state) *final_state = state;
    require(std::isfinite(total_loss), "lstm: non-finite loss");

    // Backward pass. dh/dc carry gradient from step t+1 into step t.
    MatrixXd dh = MatrixXd::Zero(rows, cfg_.hidden_dim);
    MatrixXd dc = MatrixXd::Zero(rows, cfg_.hidden_dim);
    for (int t = L - 1; t >= 0; --t) {
        const StepCache& cc = caches[t];
        const MatrixXd h_t = cc.o.cwiseProduct(cc.tanh_c);
        if (t + 1 < L) {
            w_out.g += h_t.transpose() * dlogits[t];
            b_out.g += dlogits[t].colwise().sum();
            dh += dlogits[t] * w_out.v.transpose();
        }
        const MatrixXd d_o = dh.cwiseProduct(cc.tanh_c);
        dc += dh.cwiseProduct(cc.o).cwiseProduct(
            (1.0 - cc.tanh_c.array().square()).matrix());
        const MatrixXd d_f = dc.cwiseProduct(cc.c_prev);
        const MatrixXd d_i = dc.cwiseProduct(cc.cbar);
        const MatrixXd d_cbar = dc.cwiseProduct(cc.i);
        const MatrixXd dc_prev = dc.cwiseProduct(cc.f);

        const MatrixXd da_f = d_f.cwiseProduct(cc.f).cwiseProduct((1.0 - cc.f.array()).matrix());
        const MatrixXd da_i = d_i.cwiseProduct(cc.i).cwiseProduct((1.0 - cc.i.array()).matrix());
        const MatrixXd da_o = d_o.cwiseProduct(cc.o).cwiseProduct((1.0 - cc.o.array()).matrix());
        const MatrixXd da_c = d_cbar.cwiseProduct((1.0 - cc.cbar.array().square()).matrix());

        w_f.g += cc.x.transpose() * da_f;
        w_i.g += cc.x.transpose() * da_i;
        w_o.g += cc.x.transpose() * da_o;
        w_c.g += cc.x.transpose() * da_c;
        u_f.g += cc.h_prev.transpose() * da_f;
        u_i.g += cc.h_prev.transpose() * da_i;
        u_o.g += cc.h_prev.transpose() * da_o;
        u_c.g += cc.h_prev.transpose() * da_c;
        b_f.g += da_f.colwise().sum();
        b_i.g += da_i.colwise().sum();
        b_o.g += da_o.colwise().sum();
        b_c.g += da_c.colwise().sum();

        const MatrixXd dx = da_f * w_f.v.transpose() + da_i * w_i.v.transpose() +
                            da_o * w_o.v.transpose() + da_c * w_c.v.transpose();
        for (int r = 0; r < rows; ++r) embed.g.row(tokens[r][t]) += dx.row(r);

        dh = da_f * u_f.v.transpose() + da_i * u_i.v.transpose() +
             da_o * u_o.v.transpose() + da_c * u_c.v.transpose();
        dc = dc_prev;
    }
    return total_loss;
}

MatrixXd LstmModel::step_tokens(const std::vector<int>& tokens, LstmState& state) const {
    const int rows = static_cast<int>(tokens.size());
    MatrixXd x(rows, cfg_.embed_dim);
    for (int r = 0; r < rows; ++r) {
        require(tokens[r] >= 0 && tokens[r] < cfg_.vocab, "lstm: token out of vocabulary");
        x.row(r) = embed.v.row(tokens[r]);
    }
    state = step(x, state);
    return state.h * w_out.v + b_out.v.replicate(rows, 1);
}

}  // namespace mdseq
