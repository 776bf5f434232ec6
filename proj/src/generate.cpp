#include "mdseq/generate.hpp"

#include <cmath>

#include "mdseq/nn.hpp"
#include "mdseq/training.hpp"

namespace mdseq {

namespace {

constexpr std::uint64_t kSeedStride = 0x9E3779B97F4A7C15ull;

std::vector<int> pick_context(const std::vector<Trajectory>& reference, int context_len,
                              int vocab, Rng& rng) {
    require(!reference.empty(), "generate: no reference trajectories");
    const Trajectory& ref = reference[rng.uniform_int(reference.size())];
    require(static_cast<long>(ref.size()) >= context_len,
            "generate: reference trajectory shorter than the context window");
    std::vector<int> ctx(ref.states.begin(), ref.states.begin() + context_len);
    for (int s : ctx)
        require(s >= 0 && s < vocab, "generate: context contains out-of-vocabulary state " +
                                         std::to_string(s));
    return ctx;
}

template <typename StepFn>
Trajectory run_one(const std::vector<Trajectory>& reference, const GenerationConfig& cfg,
                   int vocab, std::uint64_t traj_seed, StepFn&& step) {
    Rng rng(traj_seed);
    const std::vector<int> ctx = pick_context(reference, cfg.context_len, vocab, rng);

    Trajectory out;
    out.dt_ps = reference.front().dt_ps;
    out.n_states = vocab;
    out.states = ctx;
    out.states.reserve(static_cast<std::size_t>(cfg.length));
    step(ctx, out.states, rng);
    return out;
}

}  // namespace

int sample_logits(const RowVectorXd& logits, double temperature, bool argmax, Rng& rng,
                  int forbid) {
    require(temperature >= 0.0, "sample_logits: negative temperature");
    RowVectorXd l = logits;
    if (forbid >= 0 && forbid < l.size())
        l(forbid) = -std::numeric_limits<double>::infinity();
    if (argmax || temperature == 0.0) {
        int best = forbid == 0 && l.size() > 1 ? 1 : 0;
        for (int i = 0; i < l.size(); ++i)
            if (l(i) > l(best)) best = i;
        return best;
    }
    MatrixXd scaled = l / temperature;
    // softmax over the allowed entries; -inf maps to exactly zero weight
    const double m = scaled.row(0).maxCoeff();
    std::vector<double> w(scaled.cols());
    for (int i = 0; i < scaled.cols(); ++i) {
        const double s = scaled(0, i);
        w[i] = std::isinf(s) && s < 0 ? 0.0 : std::exp(s - m);
    }
    return rng.categorical(w);
}

std::vector<Trajectory> generate(const LstmModel& model, const std::vector<Trajectory>& reference,
                                 const GenerationConfig& cfg) {
    require(cfg.n_trajectories >= 1, "generate: need at least one trajectory");
    require(cfg.length >= cfg.context_len, "generate: length must cover the context window");
    std::vector<Trajectory> out;
    for (int k = 0; k < cfg.n_trajectories; ++k) {
        const std::uint64_t traj_seed = cfg.seed + kSeedStride * static_cast<std::uint64_t>(k);
        out.push_back(run_one(
            reference, cfg, model.vocab_size(), traj_seed,
            [&](const std::vector<int>& ctx, std::vector<int>& states, Rng& rng) {
                LstmState state = model.zero_state(1);
                MatrixXd logits;
                for (int s : ctx) logits = model.step_tokens({s}, state);
                while (static_cast<long>(states.size()) < cfg.length) {
                    const int next = sample_logits(logits.row(0), cfg.temperature, cfg.argmax,
                                                   rng, cfg.forbid_token);
                    states.push_back(next);
                    if (static_cast<long>(states.size()) < cfg.length)
                        logits = model.step_tokens({next}, state);
                }
            }));
    }
    return out;
}

std::vector<Trajectory> generate(const TransformerModel& model,
                                 const std::vector<Trajectory>& reference,
                                 const GenerationConfig& cfg) {
    require(cfg.n_trajectories >= 1, "generate: need at least one trajectory");
    require(cfg.length >= cfg.context_len, "generate: length must cover the context window");
    require(cfg.context_len <= model.config().max_len,
            "generate: context exceeds the model's position table");
    std::vector<Trajectory> out;
    for (int k = 0; k < cfg.n_trajectories; ++k) {
        const std::uint64_t traj_seed = cfg.seed + kSeedStride * static_cast<std::uint64_t>(k);
        out.push_back(run_one(
            reference, cfg, model.vocab_size(), traj_seed,
            [&](const std::vector<int>& ctx, std::vector<int>& states, Rng& rng) {
                std::vector<int> window = ctx;
                while (static_cast<long>(states.size()) < cfg.length) {
                    const MatrixXd logits = model.forward(window);
                    const int next = sample_logits(logits.row(logits.rows() - 1),
                                                   cfg.temperature, cfg.argmax, rng,
                                                   cfg.forbid_token);
                    states.push_back(next);
                    window.erase(window.begin());
                    window.push_back(next);
                }
            }));
    }
    return out;
}

std::vector<Trajectory> generate(const Checkpoint& ckpt, const std::vector<Trajectory>& reference,
                                 const GenerationConfig& cfg) {
    if (ckpt.kind == ModelKind::lstm) {
        const LstmModel model = lstm_from_checkpoint(ckpt);
        return generate(model, reference, cfg);
    }
    const TransformerModel model = transformer_from_checkpoint(ckpt);
    return generate(model, reference, cfg);
}

}  // namespace mdseq
