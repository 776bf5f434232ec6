#include "mdseq/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mdseq/jsonutil.hpp"
#include "mdseq/optimizer.hpp"

namespace mdseq {

namespace fs = std::filesystem;

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["kind"] = to_string(cfg.kind);
    j["lstm"] = {{"vocab", cfg.lstm.vocab},
                 {"embed_dim", cfg.lstm.embed_dim},
                 {"hidden_dim", cfg.lstm.hidden_dim}};
    j["transformer"] = {{"vocab", cfg.transformer.vocab},
                        {"d_model", cfg.transformer.d_model},
                        {"n_heads", cfg.transformer.n_heads},
                        {"d_ff", cfg.transformer.d_ff},
                        {"n_layers", cfg.transformer.n_layers},
                        {"dropout", cfg.transformer.dropout},
                        {"max_len", cfg.transformer.max_len},
                        {"unidirectional", cfg.transformer.unidirectional}};
    j["seq_len"] = cfg.seq_len;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["stateful"] = cfg.stateful;
    j["val_fraction"] = cfg.val_fraction;
    j["seed"] = cfg.seed;
    j["adam"] = {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"eps", cfg.adam.eps}};
    j["schedule"] = cfg.schedule;
    j["lr"] = cfg.lr;
    j["warmup_steps"] = cfg.warmup_steps;
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    check_json_keys(j, {"kind", "lstm", "transformer", "seq_len", "batch_size", "epochs",
                        "stateful", "val_fraction", "seed", "adam", "schedule", "lr",
                        "warmup_steps", "dataset"},
                    "train");
    TrainConfig cfg;
    cfg.kind = model_kind_from_string(json_get_or<std::string>(j, "kind", "lstm"));
    if (j.contains("lstm")) {
        const auto& l = j.at("lstm");
        check_json_keys(l, {"vocab", "embed_dim", "hidden_dim"}, "train.lstm");
        cfg.lstm.vocab = json_get_or(l, "vocab", 0);
        cfg.lstm.embed_dim = json_get_or(l, "embed_dim", 128);
        cfg.lstm.hidden_dim = json_get_or(l, "hidden_dim", 1024);
    }
    if (j.contains("transformer")) {
        const auto& t = j.at("transformer");
        check_json_keys(t, {"vocab", "d_model", "n_heads", "d_ff", "n_layers", "dropout",
                            "max_len", "unidirectional"},
                        "train.transformer");
        cfg.transformer.vocab = json_get_or(t, "vocab", 0);
        cfg.transformer.d_model = json_get_or(t, "d_model", 512);
        cfg.transformer.n_heads = json_get_or(t, "n_heads", 8);
        cfg.transformer.d_ff = json_get_or(t, "d_ff", 2048);
        cfg.transformer.n_layers = json_get_or(t, "n_layers", 2);
        cfg.transformer.dropout = json_get_or(t, "dropout", 0.1);
        cfg.transformer.max_len = json_get_or(t, "max_len", 512);
        cfg.transformer.unidirectional = json_get_or(t, "unidirectional", true);
    }
    cfg.seq_len = json_get_or(j, "seq_len", 100);
    cfg.batch_size = json_get_or(j, "batch_size", 64);
    cfg.epochs = json_get_or(j, "epochs", 1);
    cfg.stateful = json_get_or(j, "stateful", true);
    cfg.val_fraction = json_get_or(j, "val_fraction", 0.1);
    cfg.seed = json_get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("adam")) {
        const auto& a = j.at("adam");
        check_json_keys(a, {"beta1", "beta2", "eps"}, "train.adam");
        cfg.adam.beta1 = json_get_or(a, "beta1", 0.9);
        cfg.adam.beta2 = json_get_or(a, "beta2", 0.98);
        cfg.adam.eps = json_get_or(a, "eps", 1e-9);
    }
    cfg.schedule = json_get_or<std::string>(j, "schedule", "");
    cfg.lr = json_get_or(j, "lr", 1e-3);
    cfg.warmup_steps = json_get_or(j, "warmup_steps", 4000);
    return cfg;
}

namespace {

struct Split {
    std::vector<Trajectory> train;
    std::vector<Trajectory> val;
};

Split split_data(const std::vector<Trajectory>& data, double val_fraction) {
    require(!data.empty(), "train: no trajectories");
    Split split;
    if (val_fraction <= 0.0) {
        split.train = data;
        return split;
    }
    if (data.size() == 1) {
        // Single trajectory: hold out the tail by frame count.
        const Trajectory& t = data.front();
        const long cut = static_cast<long>(
            std::floor(static_cast<double>(t.size()) * (1.0 - val_fraction)));
        require(cut >= 2 && cut + 2 <= static_cast<long>(t.size()),
                "train: trajectory too short to split into train/validation");
        Trajectory head = t, tail = t;
        head.states.assign(t.states.begin(), t.states.begin() + cut);
        tail.states.assign(t.states.begin() + cut, t.states.end());
        split.train.push_back(std::move(head));
        split.val.push_back(std::move(tail));
        return split;
    }
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(data.size()) * val_fraction + 0.5));
    n_val = std::max<std::size_t>(1, std::min(n_val, data.size() - 1));
    split.train.assign(data.begin(), data.end() - static_cast<long>(n_val));
    split.val.assign(data.end() - static_cast<long>(n_val), data.end());
    return split;
}

std::string effective_schedule(const TrainConfig& cfg) {
    if (!cfg.schedule.empty()) {
        require(cfg.schedule == "constant" || cfg.schedule == "noam",
                "train: unknown schedule '" + cfg.schedule + "'");
        return cfg.schedule;
    }
    return cfg.kind == ModelKind::transformer ? "noam" : "constant";
}

long stateful_equivalent_steps(const std::vector<long>& lengths, int seq_len, int batch_size) {
    long windows = 0;
    for (long len : lengths) windows += len / seq_len;
    return windows / batch_size;
}

// Trainer state shared by train() and resume().
struct Engine {
    TrainConfig cfg;
    std::string schedule;
    std::unique_ptr<LstmModel> lstm;
    std::unique_ptr<TransformerModel> transformer;
    AdamState opt;
    Rng rng;
    long epochs_done = 0;
    double dt_ps = 0.0;
    int n_states = 0;

    std::vector<Param*> params() {
        return lstm ? lstm->params() : transformer->params();
    }

    double lr_at(long step) const {
        if (schedule == "noam")
            return noam_lr(step, cfg.transformer.d_model, cfg.warmup_steps);
        return cfg.lr;
    }

    nlohmann::json config_json() const {
        nlohmann::json j = train_config_to_json(cfg);
        j["dataset"] = {{"dt_ps", dt_ps}, {"n_states", n_states}};
        return j;
    }

    Checkpoint snapshot() {
        Checkpoint ckpt =
            make_checkpoint(cfg.kind, params(), opt, config_json(), epochs_done,
                            rng.serialize());
        return ckpt;
    }
};

double validation_loss(Engine& e, const std::vector<Trajectory>& val) {
    if (val.empty()) return std::nan("");
    double total = 0.0;
    long pairs = 0;
    const int L = e.cfg.seq_len;
    for (const Trajectory& t : val) {
        LstmState state;
        if (e.lstm) state = e.lstm->zero_state(1);
        for (long start = 0; start + L <= static_cast<long>(t.size()); start += L) {
            std::vector<int> window(t.states.begin() + start, t.states.begin() + start + L);
            double loss;
            if (e.lstm) {
                loss = e.lstm->loss({window}, state, &state);
            } else {
                loss = e.transformer->loss(window);
            }
            total += loss * (L - 1);
            pairs += L - 1;
        }
    }
    return pairs > 0 ? total / pairs : std::nan("");
}

TrainResult run_epochs(Engine& e, const std::vector<Trajectory>& data, int target_epochs,
                       const std::string& out_dir) {
    const Split split = split_data(data, e.cfg.val_fraction);
    std::vector<long> lengths;
    for (const auto& t : split.train) lengths.push_back(static_cast<long>(t.size()));

    if (!out_dir.empty()) fs::create_directories(out_dir);
    const std::string ckpt_path =
        out_dir.empty() ? std::string() : out_dir + "/checkpoint.bin";

    TrainResult result;
    const int B = e.cfg.batch_size;
    LstmState state;
    if (e.lstm) state = e.lstm->zero_state(B);

    long global_step = e.opt.step;
    for (; e.epochs_done < target_epochs; ++e.epochs_done) {
        BatchPlan plan;
        if (e.cfg.stateful) {
            plan = make_stateful_plan(lengths, e.cfg.seq_len, B);
        } else {
            const long n_steps = stateful_equivalent_steps(lengths, e.cfg.seq_len, B);
            require(n_steps >= 1,
                    "train: insufficient data; need at least " + std::to_string(B) +
                        " windows of " + std::to_string(e.cfg.seq_len) + " frames");
            plan = make_stateless_plan(lengths, e.cfg.seq_len, B, static_cast<int>(n_steps),
                                       e.rng);
        }
        if (e.lstm && e.cfg.stateful == false) state = e.lstm->zero_state(B);

        for (std::size_t s = 0; s < plan.steps.size(); ++s) {
            const auto batch = materialize_batch(split.train, plan, static_cast<int>(s));
            const double lr = e.lr_at(global_step + 1);
            double loss = 0.0;
            try {
                if (e.lstm) {
                    for (int b = 0; b < B; ++b) {
                        if (plan.steps[s][b].reset) {
                            state.h.row(b).setZero();
                            state.c.row(b).setZero();
                        }
                    }
                    e.lstm->zero_grad();
                    loss = e.lstm->loss_and_grad(batch, state, &state);
                } else {
                    e.transformer->zero_grad();
                    Rng* drop =
                        e.cfg.transformer.dropout > 0.0 ? &e.rng : nullptr;
                    for (const auto& row : batch)
                        loss += e.transformer->loss_and_grad(row, 1.0 / B, drop);
                }
                require(std::isfinite(loss), "train: non-finite loss");
            } catch (const std::exception& ex) {
                if (!ckpt_path.empty()) write_loss_history_csv(out_dir + "/loss_history.csv",
                                                               result.history);
                throw std::runtime_error(std::string("train: diverged at step ") +
                                         std::to_string(global_step + 1) + " (" + ex.what() +
                                         ")" +
                                         (ckpt_path.empty()
                                              ? ""
                                              : "; last good checkpoint: " + ckpt_path));
            }
            adam_step(e.params(), e.opt, lr, e.cfg.adam);
            ++global_step;
            result.history.push_back({global_step, lr, loss, 0.0, false});
        }

        const double val = validation_loss(e, split.val);
        if (!result.history.empty()) {
            result.history.back().val_loss = val;
            result.history.back().has_val = !split.val.empty();
        }
        result.final_val_loss = val;
        if (!result.history.empty()) result.final_train_loss = result.history.back().train_loss;

        if (!ckpt_path.empty()) {
            Checkpoint ckpt = e.snapshot();
            ckpt.epochs_done = e.epochs_done + 1;
            save_checkpoint(ckpt_path, ckpt);
        }
    }

    result.checkpoint = e.snapshot();
    if (!out_dir.empty()) {
        save_checkpoint(ckpt_path, result.checkpoint);
        write_loss_history_csv(out_dir + "/loss_history.csv", result.history);
    }
    return result;
}

void prepare_dataset(Engine& e, const std::vector<Trajectory>& data) {
    require(!data.empty(), "train: no trajectories");
    e.dt_ps = data.front().dt_ps;
    e.n_states = data.front().n_states;
    for (const auto& t : data) {
        t.validate();
        require(t.n_states == e.n_states && t.dt_ps == e.dt_ps,
                "train: trajectories disagree on n_states or dt");
    }
}

}  // namespace

TrainResult train(const std::vector<Trajectory>& data, const TrainConfig& cfg) {
    Engine e;
    e.cfg = cfg;
    e.schedule = effective_schedule(cfg);
    prepare_dataset(e, data);

    e.rng = Rng(cfg.seed);
    if (cfg.kind == ModelKind::lstm) {
        LstmConfig lc = cfg.lstm;
        if (lc.vocab == 0) lc.vocab = e.n_states;
        require(lc.vocab >= e.n_states, "train: vocab smaller than state alphabet");
        e.cfg.lstm = lc;
        e.lstm = std::make_unique<LstmModel>(lc, e.rng);
    } else {
        TransformerConfig tc = cfg.transformer;
        if (tc.vocab == 0) tc.vocab = e.n_states;
        require(tc.vocab >= e.n_states, "train: vocab smaller than state alphabet");
        require(tc.max_len >= cfg.seq_len, "train: transformer max_len shorter than seq_len");
        e.cfg.transformer = tc;
        e.transformer = std::make_unique<TransformerModel>(tc, e.rng);
    }
    e.opt.init(e.params());
    return run_epochs(e, data, cfg.epochs, cfg.out_dir);
}

TrainResult resume(const std::vector<Trajectory>& data, const Checkpoint& ckpt,
                   int target_epochs, const std::string& out_dir) {
    Engine e;
    e.cfg = train_config_from_json(ckpt.config);
    e.schedule = effective_schedule(e.cfg);
    prepare_dataset(e, data);

    if (ckpt.kind == ModelKind::lstm) {
        e.lstm = std::make_unique<LstmModel>(lstm_from_checkpoint(ckpt));
    } else {
        e.transformer = std::make_unique<TransformerModel>(transformer_from_checkpoint(ckpt));
    }
    restore_optimizer(e.params(), ckpt, e.opt);
    e.rng.deserialize(ckpt.rng_state);
    e.epochs_done = ckpt.epochs_done;

    const int target = target_epochs > 0 ? target_epochs : e.cfg.epochs;
    return run_epochs(e, data, target, out_dir);
}

LstmModel lstm_from_checkpoint(const Checkpoint& ckpt) {
    require(ckpt.kind == ModelKind::lstm, "checkpoint does not hold an LSTM");
    const TrainConfig cfg = train_config_from_json(ckpt.config);
    Rng throwaway(0);
    LstmModel model(cfg.lstm, throwaway);
    restore_params(model.params(), ckpt.tensors);
    return model;
}

TransformerModel transformer_from_checkpoint(const Checkpoint& ckpt) {
    require(ckpt.kind == ModelKind::transformer, "checkpoint does not hold a transformer");
    const TrainConfig cfg = train_config_from_json(ckpt.config);
    Rng throwaway(0);
    TransformerModel model(cfg.transformer, throwaway);
    restore_params(model.params(), ckpt.tensors);
    return model;
}

void write_loss_history_csv(const std::string& path, const std::vector<LossRow>& rows) {
    std::ofstream os(path);
    require(os.good(), "cannot open " + path);
    os << "step,lr,train_loss,val_loss\n";
    for (const auto& r : rows) {
        os << r.step << ',' << format_double(r.lr) << ',' << format_double(r.train_loss) << ',';
        if (r.has_val) os << format_double(r.val_loss);
        os << '\n';
    }
}

}  // namespace mdseq
