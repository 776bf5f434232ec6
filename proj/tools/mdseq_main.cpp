// mdseq: discrete-state dynamics learned with sequence models.
//
// Pipeline stages: simulate -> discretize -> coarsegrain -> train ->
// generate -> evaluate, plus a one-shot `pipeline` runner. Every stage
// reads an optional JSON config, applies command-line overrides, writes
// the fully resolved config beside its outputs and holds a lock file on
// the output directory while running.

#include <CLI11.hpp>
#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "mdseq/coarse_grain.hpp"
#include "mdseq/discretize.hpp"
#include "mdseq/dynamics.hpp"
#include "mdseq/generate.hpp"
#include "mdseq/io.hpp"
#include "mdseq/jsonutil.hpp"
#include "mdseq/report.hpp"
#include "mdseq/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mdseq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingInput = 3;

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] void config_error(const std::string& msg) { throw CliError(kExitConfig, msg); }
[[noreturn]] void missing_input(const std::string& msg) { throw CliError(kExitMissingInput, msg); }

std::string resolve_out(const std::string& out) {
    if (out.empty()) config_error("--out is required");
    fs::path p(out);
    if (p.is_relative()) {
        if (const char* root = std::getenv("MDSEQ_OUT_ROOT")) p = fs::path(root) / p;
    }
    return p.string();
}

// Exclusive lock on an output directory for the lifetime of a stage.
class DirLock {
public:
    explicit DirLock(const std::string& dir) : path_(dir + "/.lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw CliError(kExitRuntime, "output directory is locked by another run: " + dir +
                                             " (remove " + path_ + " if that run is gone)");
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::string path_;
    int fd_ = -1;
};

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    if (!fs::exists(path)) missing_input("config file not found: " + path);
    std::ifstream is(path);
    try {
        return json::parse(is);
    } catch (const std::exception& e) {
        config_error(std::string("cannot parse config ") + path + ": " + e.what());
    }
}

void merge_overrides(json& base, const json& overrides) {
    for (const auto& [key, value] : overrides.items()) base[key] = value;
}

void write_resolved_config(const std::string& dir, const json& cfg) {
    std::ofstream os(dir + "/config.json");
    os << cfg.dump(2) << '\n';
}

std::string index_name(const std::string& prefix, int i, const std::string& suffix) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", i);
    return prefix + buf + suffix;
}

Eigen::MatrixXd matrix_from_config(const json& cfg) {
    if (cfg.contains("transition_matrix")) {
        const auto& rows = cfg.at("transition_matrix");
        const int n = static_cast<int>(rows.size());
        Eigen::MatrixXd T(n, n);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(rows[i].size()) != n)
                config_error("transition_matrix must be square");
            for (int j = 0; j < n; ++j) T(i, j) = rows[i][j].get<double>();
        }
        return T;
    }
    const std::string preset = json_get_or<std::string>(cfg, "preset", "twoblock8");
    if (preset == "twostate") {
        Eigen::MatrixXd T(2, 2);
        T << 0.9, 0.1, 0.2, 0.8;
        return T;
    }
    if (preset == "twoblock8") {
        return two_block_chain(json_get_or(cfg, "block_a", 4), json_get_or(cfg, "block_b", 4),
                               json_get_or(cfg, "escape_a", 0.003),
                               json_get_or(cfg, "escape_b", 0.006));
    }
    config_error("unknown markov preset '" + preset + "'");
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(json cfg, const std::string& out) {
    check_json_keys(cfg, {"kind", "n_steps", "n_trajectories", "dt_ps", "kT", "gamma", "seed",
                          "subsample", "start", "preset", "transition_matrix", "block_a",
                          "block_b", "escape_a", "escape_b"},
                    "simulate");
    DirLock lock(out);
    const std::string kind = json_get_or<std::string>(cfg, "kind", "langevin");
    const int n_traj = json_get_or(cfg, "n_trajectories", 1);
    const long n_steps = json_get_or<long>(cfg, "n_steps", 100000);
    const std::uint64_t seed = json_get_or<std::uint64_t>(cfg, "seed", 0);
    const int m = json_get_or(cfg, "subsample", 1);

    if (kind == "langevin") {
        const PotentialSpec spec = builtin_double_well();
        LangevinConfig lc;
        lc.n_steps = n_steps;
        lc.dt_ps = json_get_or(cfg, "dt_ps", 0.01);
        lc.kT = json_get_or(cfg, "kT", double_well_default_kT());
        lc.gamma = json_get_or(cfg, "gamma", 1.0);
        if (cfg.contains("start")) lc.start = cfg.at("start").get<std::vector<double>>();
        for (int i = 0; i < n_traj; ++i) {
            lc.seed = seed + static_cast<std::uint64_t>(i);
            FrameSeries fs = simulate_langevin(spec, lc);
            if (m > 1) fs = subsample(fs, m);
            write_frame_series(out + "/" + index_name("frames_", i, ".csv"), fs);
        }
    } else if (kind == "markov") {
        const Eigen::MatrixXd T = matrix_from_config(cfg);
        const double dt = json_get_or(cfg, "dt_ps", 0.1);
        for (int i = 0; i < n_traj; ++i) {
            Trajectory t =
                sample_markov_chain(T, n_steps, {}, seed + static_cast<std::uint64_t>(i), dt);
            if (m > 1) t = subsample(t, m);
            write_trajectory(out + "/" + index_name("traj_", i, ".txt"), t);
        }
    } else {
        config_error("simulate.kind must be 'langevin' or 'markov'");
    }
    cfg["kind"] = kind;
    cfg["n_steps"] = n_steps;
    cfg["n_trajectories"] = n_traj;
    cfg["seed"] = seed;
    cfg["subsample"] = m;
    write_resolved_config(out, cfg);
    return kExitOk;
}

// -------------------------------------------------------------- discretize

int cmd_discretize(json cfg, const std::string& out) {
    check_json_keys(cfg, {"frames", "method", "preset", "n_bins", "lo", "hi", "periodic",
                          "column", "k", "metric", "subsample"},
                    "discretize");
    const std::string preset = json_get_or<std::string>(cfg, "preset", "");
    if (preset == "torsion20") {
        cfg["method"] = "torsion";
        if (!cfg.contains("n_bins")) cfg["n_bins"] = 20;
    } else if (preset == "kcenter100") {
        cfg["method"] = "kcenter";
        if (!cfg.contains("k")) cfg["k"] = 100;
    } else if (!preset.empty()) {
        config_error("unknown discretize preset '" + preset + "'");
    }

    const std::string frames_path = json_get_or<std::string>(cfg, "frames", "");
    if (frames_path.empty()) config_error("discretize.frames is required");
    if (!fs::exists(frames_path)) missing_input("frames not found: " + frames_path);

    DirLock lock(out);
    std::vector<FrameSeries> sets = read_frame_series_set(frames_path);
    const int m = json_get_or(cfg, "subsample", 1);
    if (m > 1)
        for (auto& fsr : sets) fsr = subsample(fsr, m);

    const std::string method = json_get_or<std::string>(cfg, "method", "kcenter");
    if (method == "torsion") {
        BinningSpec spec;
        spec.n_bins = json_get_or(cfg, "n_bins", 20);
        spec.lo = json_get_or(cfg, "lo", -180.0);
        spec.hi = json_get_or(cfg, "hi", 180.0);
        spec.periodic = json_get_or(cfg, "periodic", true);
        const int column = json_get_or(cfg, "column", 0);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            if (column >= sets[i].dim()) config_error("discretize.column out of range");
            std::vector<double> angles;
            for (const auto& frame : sets[i].frames) angles.push_back(frame[column]);
            const Trajectory t = bin_torsion(angles, spec, sets[i].dt_ps);
            write_trajectory(out + "/" + index_name("traj_", static_cast<int>(i), ".txt"), t);
        }
    } else if (method == "kcenter") {
        const int k = json_get_or(cfg, "k", 100);
        const std::string metric = json_get_or<std::string>(cfg, "metric", "euclidean");
        // fit on the pooled frames, then assign each series separately
        FrameSeries pooled = sets.front();
        for (std::size_t i = 1; i < sets.size(); ++i)
            pooled.frames.insert(pooled.frames.end(), sets[i].frames.begin(),
                                 sets[i].frames.end());
        const ClusterModel model = k_center_cluster(pooled, k, metric);
        write_cluster_model(out + "/clusters.txt", model);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const Trajectory t = assign(sets[i], model);
            write_trajectory(out + "/" + index_name("traj_", static_cast<int>(i), ".txt"), t);
        }
    } else {
        config_error("discretize.method must be 'torsion' or 'kcenter'");
    }
    cfg["method"] = method;
    cfg["subsample"] = m;
    write_resolved_config(out, cfg);
    return kExitOk;
}

// ------------------------------------------------------------- coarsegrain

int cmd_coarsegrain(json cfg, const std::string& out) {
    check_json_keys(cfg, {"trajs", "ops", "lag", "n_macro", "min_dwell", "subsample"},
                    "coarsegrain");
    const std::string trajs_path = json_get_or<std::string>(cfg, "trajs", "");
    if (trajs_path.empty()) config_error("coarsegrain.trajs is required");
    if (!fs::exists(trajs_path)) missing_input("trajectories not found: " + trajs_path);

    DirLock lock(out);
    std::vector<Trajectory> trajs = read_trajectory_set(trajs_path);
    const int m = json_get_or(cfg, "subsample", 1);
    if (m > 1)
        for (auto& t : trajs) t = subsample(t, m);

    std::vector<std::string> ops;
    if (cfg.contains("ops")) {
        ops = cfg.at("ops").get<std::vector<std::string>>();
    } else {
        ops = {"pcca"};
    }
    for (const std::string& op : ops) {
        if (op == "pcca") {
            const int lag = json_get_or(cfg, "lag", 1);
            const TransitionModel model =
                transition_matrix(count_transitions(trajs, lag), /*reversible=*/true);
            int n_macro = json_get_or(cfg, "n_macro", 0);
            if (n_macro <= 0) n_macro = suggest_n_macro(model);
            const LumpingMap compact = pcca_plus(model, n_macro);
            const LumpingMap map =
                expand_lumping(compact, model.state_labels, trajs.front().n_states);
            write_lumping_map(out + "/lumping.txt", map);
            for (auto& t : trajs) t = lump_trajectory(t, map);
            cfg["n_macro"] = n_macro;
        } else if (op == "recross") {
            const int min_dwell = json_get_or(cfg, "min_dwell", 3);
            for (auto& t : trajs) t = remove_recrossing(t, min_dwell);
            cfg["min_dwell"] = min_dwell;
        } else {
            config_error("coarsegrain op must be 'pcca' or 'recross', got '" + op + "'");
        }
    }
    for (std::size_t i = 0; i < trajs.size(); ++i)
        write_trajectory(out + "/" + index_name("traj_", static_cast<int>(i), ".txt"),
                         trajs[i]);
    cfg["ops"] = ops;
    cfg["subsample"] = m;
    write_resolved_config(out, cfg);
    return kExitOk;
}

// ------------------------------------------------------------------- train

int cmd_train(json cfg, const std::string& out) {
    check_json_keys(cfg, {"trajs", "recode", "max_run_length", "train"}, "");
    const std::string trajs_path = json_get_or<std::string>(cfg, "trajs", "");
    if (trajs_path.empty()) config_error("train.trajs is required");
    if (!fs::exists(trajs_path)) missing_input("trajectories not found: " + trajs_path);

    DirLock lock(out);
    std::vector<Trajectory> trajs = read_trajectory_set(trajs_path);

    const std::string recode = json_get_or<std::string>(cfg, "recode", "");
    TrainConfig tc = train_config_from_json(cfg.value("train", json::object()));
    tc.out_dir = out;

    if (recode == "rle") {
        const int max_run = json_get_or(cfg, "max_run_length", 1000);
        std::vector<RleSequence> seqs;
        for (const auto& t : trajs) seqs.push_back(run_length_encode(t, max_run));
        const RunLengthVocab vocab = build_rle_vocab(seqs);
        write_rle_vocab(out + "/rle_vocab.txt", vocab);
        std::vector<Trajectory> recoded;
        for (const auto& s : seqs) recoded.push_back(encode_with_vocab(vocab, s));
        trajs = std::move(recoded);
        if (tc.kind == ModelKind::lstm && tc.lstm.vocab == 0)
            tc.lstm.vocab = vocab.vocab_size();
        if (tc.kind == ModelKind::transformer && tc.transformer.vocab == 0)
            tc.transformer.vocab = vocab.vocab_size();
    } else if (!recode.empty()) {
        config_error("train.recode must be empty or 'rle'");
    }

    const TrainResult result = train(trajs, tc);
    cfg["train"] = train_config_to_json(tc);
    cfg["recode"] = recode;
    cfg["final_train_loss"] = result.final_train_loss;
    cfg["final_val_loss"] = result.final_val_loss;
    write_resolved_config(out, cfg);
    return kExitOk;
}

// ---------------------------------------------------------------- generate

int cmd_generate(json cfg, const std::string& out) {
    check_json_keys(cfg, {"checkpoint", "reference", "rle_vocab", "n_trajectories", "length",
                          "context_len", "temperature", "argmax", "seed"},
                    "generate");
    const std::string ckpt_path = json_get_or<std::string>(cfg, "checkpoint", "");
    const std::string ref_path = json_get_or<std::string>(cfg, "reference", "");
    if (ckpt_path.empty() || ref_path.empty())
        config_error("generate.checkpoint and generate.reference are required");
    if (!fs::exists(ckpt_path)) missing_input("checkpoint not found: " + ckpt_path);
    if (!fs::exists(ref_path)) missing_input("reference not found: " + ref_path);

    DirLock lock(out);
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    std::vector<Trajectory> reference = read_trajectory_set(ref_path);

    GenerationConfig gc;
    gc.n_trajectories = json_get_or(cfg, "n_trajectories", 100);
    gc.length = json_get_or<long>(cfg, "length", 10000);
    gc.context_len = json_get_or(cfg, "context_len", 100);
    gc.temperature = json_get_or(cfg, "temperature", 1.0);
    gc.argmax = json_get_or(cfg, "argmax", false);
    gc.seed = json_get_or<std::uint64_t>(cfg, "seed", 0);

    const std::string vocab_path = json_get_or<std::string>(cfg, "rle_vocab", "");
    std::vector<Trajectory> generated;
    if (!vocab_path.empty()) {
        if (!fs::exists(vocab_path)) missing_input("rle vocab not found: " + vocab_path);
        const RunLengthVocab vocab = read_rle_vocab(vocab_path);
        const double dt = reference.front().dt_ps;
        std::vector<Trajectory> encoded;
        for (const auto& t : reference)
            encoded.push_back(encode_with_vocab(vocab, run_length_encode(t, vocab.max_run_length
                                                                                  ? vocab.max_run_length
                                                                                  : 1000)));
        gc.forbid_token = vocab.unknown_id();
        const auto token_streams = generate(ckpt, encoded, gc);
        for (const auto& ids : token_streams)
            generated.push_back(decode_with_vocab(vocab, ids, dt));
    } else {
        generated = generate(ckpt, reference, gc);
    }
    for (std::size_t i = 0; i < generated.size(); ++i)
        write_trajectory(out + "/" + index_name("traj_", static_cast<int>(i), ".txt"),
                         generated[i]);
    cfg["n_trajectories"] = gc.n_trajectories;
    cfg["length"] = gc.length;
    cfg["context_len"] = gc.context_len;
    cfg["temperature"] = gc.temperature;
    cfg["seed"] = gc.seed;
    cfg["checkpoint_hash"] = ckpt.config_hash();
    write_resolved_config(out, cfg);
    return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(json cfg, const std::string& out) {
    check_json_keys(cfg, {"reference", "generated", "lags", "k_its", "mfpt_lag", "n_boot",
                          "seed", "provenance"},
                    "evaluate");
    const std::string ref_path = json_get_or<std::string>(cfg, "reference", "");
    const std::string gen_path = json_get_or<std::string>(cfg, "generated", "");
    if (ref_path.empty() || gen_path.empty())
        config_error("evaluate.reference and evaluate.generated are required");
    if (!fs::exists(ref_path)) missing_input("reference not found: " + ref_path);
    if (!fs::exists(gen_path)) missing_input("generated not found: " + gen_path);

    DirLock lock(out);
    const std::vector<Trajectory> reference = read_trajectory_set(ref_path);
    const std::vector<Trajectory> generated = read_trajectory_set(gen_path);

    ReportConfig rc;
    if (cfg.contains("lags")) rc.lags = cfg.at("lags").get<std::vector<int>>();
    rc.k_its = json_get_or(cfg, "k_its", 3);
    rc.mfpt_lag = json_get_or(cfg, "mfpt_lag", 1);
    rc.n_boot = json_get_or(cfg, "n_boot", 50);
    rc.seed = json_get_or<std::uint64_t>(cfg, "seed", 0);
    rc.provenance = cfg.value("provenance", json::object());

    const EvalReport report = build_report(reference, generated, rc);
    write_report(out, report);
    cfg["lags"] = rc.lags;
    cfg["k_its"] = rc.k_its;
    cfg["mfpt_lag"] = rc.mfpt_lag;
    cfg["n_boot"] = rc.n_boot;
    write_resolved_config(out, cfg);
    return kExitOk;
}

// ---------------------------------------------------------------- pipeline

struct PipelineCell {
    std::string name;
    std::string data;          // trajectory directory relative to the run root
    json coarsegrain;          // empty = none
    json train;
    json generate;
    json evaluate;
};

int cmd_pipeline(json cfg, const std::string& out) {
    check_json_keys(cfg, {"preset", "scale", "seed"}, "pipeline");
    const std::string preset = json_get_or<std::string>(cfg, "preset", "smoke");
    const std::string scale = json_get_or<std::string>(cfg, "scale", "desk");
    const std::uint64_t seed = json_get_or<std::uint64_t>(cfg, "seed", 0);
    if (scale != "desk") config_error("pipeline.scale supports only 'desk'");

    fs::create_directories(out);
    DirLock lock(out);

    const bool smoke = preset == "smoke";
    if (!smoke && preset != "paper-ablation")
        config_error("pipeline.preset must be 'smoke' or 'paper-ablation'");

    // ---- shared surrogate data ------------------------------------------
    // Two-block metastable chain at fine resolution; subsampled variants
    // emulate coarser saving intervals.
    const std::string data_root = out + "/data";
    {
        json sim;
        sim["kind"] = "markov";
        sim["preset"] = smoke ? "twostate" : "twoblock8";
        sim["n_trajectories"] = smoke ? 4 : 10;
        sim["n_steps"] = smoke ? 3000 : 20000;
        sim["dt_ps"] = 0.1;
        sim["seed"] = seed;
        cmd_simulate(sim, data_root + "/m1");
    }
    const std::vector<int> subsamples = smoke ? std::vector<int>{} : std::vector<int>{10, 20, 100};
    for (int m : subsamples) {
        const auto trajs = read_trajectory_set(data_root + "/m1");
        const std::string dir = data_root + "/m" + std::to_string(m);
        fs::create_directories(dir);
        for (std::size_t i = 0; i < trajs.size(); ++i)
            write_trajectory(dir + "/" + index_name("traj_", static_cast<int>(i), ".txt"),
                             subsample(trajs[i], m));
    }

    // ---- cell table ------------------------------------------------------
    json lstm_train = {{"kind", "lstm"},
                       {"lstm", {{"embed_dim", smoke ? 8 : 32}, {"hidden_dim", smoke ? 16 : 64}}},
                       {"seq_len", smoke ? 30 : 100},
                       {"batch_size", smoke ? 8 : 32},
                       {"epochs", smoke ? 1 : 3},
                       {"val_fraction", 0.2},
                       {"seed", seed + 1}};
    json tf_train = {{"kind", "transformer"},
                     {"transformer",
                      {{"d_model", smoke ? 16 : 64},
                       {"n_heads", 2},
                       {"d_ff", smoke ? 32 : 128},
                       {"n_layers", smoke ? 1 : 2},
                       {"dropout", 0.1},
                       {"max_len", smoke ? 64 : 128}}},
                     {"seq_len", smoke ? 30 : 100},
                     {"batch_size", smoke ? 8 : 16},
                     {"stateful", false},
                     {"epochs", smoke ? 1 : 2},
                     {"warmup_steps", 400},
                     {"val_fraction", 0.2},
                     {"seed", seed + 1}};
    json gen_small = {{"n_trajectories", smoke ? 5 : 30},
                      {"length", smoke ? 500 : 3000},
                      {"context_len", smoke ? 30 : 100},
                      {"seed", seed + 2}};
    json gen_tf = {{"n_trajectories", smoke ? 3 : 8},
                   {"length", smoke ? 200 : 600},
                   {"context_len", smoke ? 30 : 100},
                   {"seed", seed + 2}};
    json eval_cfg = {{"lags", smoke ? json::array({1, 2, 5}) : json::array({1, 2, 5, 10, 20})},
                     {"k_its", smoke ? 1 : 3},
                     {"mfpt_lag", 1},
                     {"n_boot", smoke ? 10 : 50},
                     {"seed", seed + 3}};

    std::vector<PipelineCell> cells;
    if (smoke) {
        cells.push_back({"lstm_m1", "m1", {}, lstm_train, gen_small, eval_cfg});
        cells.push_back({"transformer_m1_uni", "m1", {}, tf_train, gen_tf, eval_cfg});
    } else {
        cells.push_back({"lstm_m1", "m1", {}, lstm_train, gen_small, eval_cfg});
        cells.push_back({"lstm_m10", "m10", {}, lstm_train, gen_small, eval_cfg});
        cells.push_back({"lstm_m20", "m20", {}, lstm_train, gen_small, eval_cfg});
        {
            json small = lstm_train;
            small["seq_len"] = 50;
            small["batch_size"] = 8;
            json gen = gen_small;
            gen["context_len"] = 50;
            cells.push_back({"lstm_m100", "m100", {}, small, gen, eval_cfg});
        }
        cells.push_back({"lstm_m1_pcca", "m1",
                         json{{"ops", json::array({"pcca"})}, {"lag", 10}, {"n_macro", 2}},
                         lstm_train, gen_small, eval_cfg});
        cells.push_back({"lstm_m1_recross", "m1",
                         json{{"ops", json::array({"recross"})}, {"min_dwell", 3}}, lstm_train,
                         gen_small, eval_cfg});
        {
            json rle = lstm_train;
            cells.push_back({"lstm_m1_rle", "m1", {}, rle, gen_small, eval_cfg});
            cells.back().train = rle;
        }
        {
            json stateless = lstm_train;
            stateless["stateful"] = false;
            cells.push_back({"lstm_m1_stateless", "m1", {}, stateless, gen_small, eval_cfg});
        }
        cells.push_back({"transformer_m1_uni", "m1", {}, tf_train, gen_tf, eval_cfg});
        {
            json bi = tf_train;
            bi["transformer"]["unidirectional"] = false;
            cells.push_back({"transformer_m1_bi", "m1", {}, bi, gen_tf, eval_cfg});
        }
    }

    for (const auto& cell : cells) {
        const std::string cell_dir = out + "/" + cell.name;
        std::cout << "[pipeline] cell " << cell.name << "\n";
        std::string train_data = data_root + "/" + cell.data;

        if (!cell.coarsegrain.empty()) {
            json cg = cell.coarsegrain;
            cg["trajs"] = train_data;
            cmd_coarsegrain(cg, cell_dir + "/coarse");
            train_data = cell_dir + "/coarse";
        }

        json tr;
        tr["trajs"] = train_data;
        tr["train"] = cell.train;
        const bool rle = cell.name.find("_rle") != std::string::npos;
        if (rle) tr["recode"] = "rle";
        cmd_train(tr, cell_dir + "/train");

        json gen = cell.generate;
        gen["checkpoint"] = cell_dir + "/train/checkpoint.bin";
        gen["reference"] = train_data;
        if (rle) gen["rle_vocab"] = cell_dir + "/train/rle_vocab.txt";
        cmd_generate(gen, cell_dir + "/generated");

        json ev = cell.evaluate;
        ev["reference"] = train_data;
        ev["generated"] = cell_dir + "/generated";
        ev["provenance"] = {{"cell", cell.name}, {"preset", preset}, {"seed", seed}};
        cmd_evaluate(ev, cell_dir + "/report");
    }

    cfg["preset"] = preset;
    cfg["scale"] = scale;
    cfg["seed"] = seed;
    write_resolved_config(out, cfg);
    return kExitOk;
}

// -------------------------------------------------------------------- main

// Collects --config plus explicitly passed flags into the final stage
// config; flags beat file values, file values beat defaults.
struct StageArgs {
    std::string config_path;
    std::string out;
    json flag_overrides = json::object();

    json resolve() const {
        json cfg = load_config_file(config_path);
        merge_overrides(cfg, flag_overrides);
        return cfg;
    }
};

void add_flag_option(CLI::App* cmd, StageArgs& args, const std::string& flag,
                     const std::string& key, const std::string& desc, bool is_string = false,
                     bool is_bool = false) {
    if (is_bool) {
        cmd->add_flag_callback(
            flag, [&args, key]() { args.flag_overrides[key] = true; }, desc);
        return;
    }
    cmd->add_option_function<std::string>(
        flag,
        [&args, key, is_string](const std::string& raw) {
            if (is_string) {
                args.flag_overrides[key] = raw;
                return;
            }
            try {
                args.flag_overrides[key] = json::parse(raw);
            } catch (const std::exception&) {
                throw CLI::ValidationError(key, "'" + raw + "' is not a valid value");
            }
        },
        desc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mdseq: sequence models for discrete-state stochastic dynamics"};
    app.require_subcommand(1);

    StageArgs sim_args, disc_args, cg_args, train_args, gen_args, eval_args, pipe_args;
    std::string train_nested_str;

    auto add_common = [](CLI::App* cmd, StageArgs& args) {
        cmd->add_option("--config", args.config_path, "JSON config file (flags override it)");
        cmd->add_option("--out", args.out, "output directory")->required();
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate surrogate dynamics data");
    add_common(sim, sim_args);
    add_flag_option(sim, sim_args, "--kind", "kind", "langevin | markov", true);
    add_flag_option(sim, sim_args, "--preset", "preset", "markov preset: twostate | twoblock8",
                    true);
    add_flag_option(sim, sim_args, "--n-steps", "n_steps", "steps per trajectory");
    add_flag_option(sim, sim_args, "--n-trajectories", "n_trajectories", "trajectory count");
    add_flag_option(sim, sim_args, "--dt", "dt_ps", "time step in ps");
    add_flag_option(sim, sim_args, "--kT", "kT", "temperature (langevin)");
    add_flag_option(sim, sim_args, "--gamma", "gamma", "friction (langevin)");
    add_flag_option(sim, sim_args, "--seed", "seed", "base RNG seed");
    add_flag_option(sim, sim_args, "--subsample", "subsample", "keep every m-th frame");

    CLI::App* disc = app.add_subcommand("discretize", "frames to state trajectories");
    add_common(disc, disc_args);
    add_flag_option(disc, disc_args, "--frames", "frames", "frame series file or directory",
                    true);
    add_flag_option(disc, disc_args, "--method", "method", "torsion | kcenter", true);
    add_flag_option(disc, disc_args, "--preset", "preset", "torsion20 | kcenter100", true);
    add_flag_option(disc, disc_args, "--n-bins", "n_bins", "torsion bin count");
    add_flag_option(disc, disc_args, "--column", "column", "coordinate column to bin");
    add_flag_option(disc, disc_args, "--k", "k", "cluster count");
    add_flag_option(disc, disc_args, "--metric", "metric", "euclidean | rmsd", true);
    add_flag_option(disc, disc_args, "--subsample", "subsample", "keep every m-th frame");

    CLI::App* cg = app.add_subcommand("coarsegrain", "lumping and recrossing removal");
    add_common(cg, cg_args);
    add_flag_option(cg, cg_args, "--trajs", "trajs", "trajectory file or directory", true);
    add_flag_option(cg, cg_args, "--ops", "ops", "JSON list, e.g. [\"pcca\",\"recross\"]");
    add_flag_option(cg, cg_args, "--lag", "lag", "estimation lag in frames");
    add_flag_option(cg, cg_args, "--n-macro", "n_macro", "macro states (0 = spectral gap)");
    add_flag_option(cg, cg_args, "--min-dwell", "min_dwell", "recrossing dwell threshold");
    add_flag_option(cg, cg_args, "--subsample", "subsample", "keep every m-th frame");

    CLI::App* tr = app.add_subcommand("train", "fit a sequence model");
    add_common(tr, train_args);
    add_flag_option(tr, train_args, "--trajs", "trajs", "trajectory file or directory", true);
    add_flag_option(tr, train_args, "--recode", "recode", "'' or 'rle'", true);
    tr->add_option("--train-json", train_nested_str,
                   "inline JSON merged into the train block, e.g. '{\"epochs\":3}'");

    CLI::App* gen = app.add_subcommand("generate", "autoregressive trajectory generation");
    add_common(gen, gen_args);
    add_flag_option(gen, gen_args, "--checkpoint", "checkpoint", "trained checkpoint", true);
    add_flag_option(gen, gen_args, "--reference", "reference", "reference trajectories", true);
    add_flag_option(gen, gen_args, "--rle-vocab", "rle_vocab", "vocab file for rle models",
                    true);
    add_flag_option(gen, gen_args, "--n-trajectories", "n_trajectories", "ensemble size");
    add_flag_option(gen, gen_args, "--length", "length", "frames per trajectory");
    add_flag_option(gen, gen_args, "--context-len", "context_len", "seed window length");
    add_flag_option(gen, gen_args, "--temperature", "temperature", "softmax temperature");
    add_flag_option(gen, gen_args, "--argmax", "argmax", "greedy decoding", false, true);
    add_flag_option(gen, gen_args, "--seed", "seed", "base RNG seed");

    CLI::App* ev = app.add_subcommand("evaluate", "reference vs generated report");
    add_common(ev, eval_args);
    add_flag_option(ev, eval_args, "--reference", "reference", "reference trajectories", true);
    add_flag_option(ev, eval_args, "--generated", "generated", "generated trajectories", true);
    add_flag_option(ev, eval_args, "--lags", "lags", "JSON list of lags in frames");
    add_flag_option(ev, eval_args, "--k-its", "k_its", "timescales per lag");
    add_flag_option(ev, eval_args, "--mfpt-lag", "mfpt_lag", "MFPT estimation lag");
    add_flag_option(ev, eval_args, "--n-boot", "n_boot", "bootstrap replicates");
    add_flag_option(ev, eval_args, "--seed", "seed", "bootstrap seed");

    CLI::App* pipe = app.add_subcommand("pipeline", "run a full experiment preset");
    add_common(pipe, pipe_args);
    add_flag_option(pipe, pipe_args, "--preset", "preset", "smoke | paper-ablation", true);
    add_flag_option(pipe, pipe_args, "--scale", "scale", "desk", true);
    add_flag_option(pipe, pipe_args, "--seed", "seed", "base seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_args.resolve(), resolve_out(sim_args.out));
        if (disc->parsed())
            return cmd_discretize(disc_args.resolve(), resolve_out(disc_args.out));
        if (cg->parsed()) return cmd_coarsegrain(cg_args.resolve(), resolve_out(cg_args.out));
        if (tr->parsed()) {
            json cfg = train_args.resolve();
            if (!train_nested_str.empty()) {
                json nested;
                try {
                    nested = json::parse(train_nested_str);
                } catch (const std::exception& e) {
                    config_error(std::string("--train-json is not valid JSON: ") + e.what());
                }
                if (!cfg.contains("train")) cfg["train"] = json::object();
                merge_overrides(cfg["train"], nested);
            }
            return cmd_train(cfg, resolve_out(train_args.out));
        }
        if (gen->parsed()) return cmd_generate(gen_args.resolve(), resolve_out(gen_args.out));
        if (ev->parsed()) return cmd_evaluate(eval_args.resolve(), resolve_out(eval_args.out));
        if (pipe->parsed()) return cmd_pipeline(pipe_args.resolve(), resolve_out(pipe_args.out));
    } catch (const CliError& e) {
        std::cerr << json{{"error", e.what()}, {"exit_code", e.code}}.dump() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"exit_code", kExitRuntime}}.dump() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
