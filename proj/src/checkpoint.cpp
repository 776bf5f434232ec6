#include "mdseq/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace mdseq {

namespace {

constexpr char kMagic[8] = {'M', 'D', 'S', 'E', 'Q', 'C', 'P', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_tensor(std::ostream& os, const NamedTensor& t) {
    write_u32(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_u64(os, static_cast<std::uint64_t>(t.data.rows()));
    write_u64(os, static_cast<std::uint64_t>(t.data.cols()));
    for (int r = 0; r < t.data.rows(); ++r)
        os.write(reinterpret_cast<const char*>(t.data.row(r).eval().data()),
                 static_cast<std::streamsize>(sizeof(double) * t.data.cols()));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::string read_string(std::istream& is) {
    const std::uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}
NamedTensor read_tensor(std::istream& is) {
    NamedTensor t;
    const std::uint32_t name_len = read_u32(is);
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    const std::uint64_t rows = read_u64(is);
    const std::uint64_t cols = read_u64(is);
    t.data.resize(static_cast<int>(rows), static_cast<int>(cols));
    std::vector<double> row(cols);
    for (std::uint64_t r = 0; r < rows; ++r) {
        is.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double) * cols));
        for (std::uint64_t c = 0; c < cols; ++c) t.data(static_cast<int>(r), static_cast<int>(c)) = row[c];
    }
    return t;
}

}  // namespace

std::string to_string(ModelKind kind) {
    return kind == ModelKind::lstm ? "lstm" : "transformer";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "lstm") return ModelKind::lstm;
    if (s == "transformer") return ModelKind::transformer;
    throw std::runtime_error("unknown model kind '" + s + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        require(os.good(), "save_checkpoint: cannot open " + tmp);
        os.write(kMagic, sizeof(kMagic));
        write_u32(os, ckpt.kind == ModelKind::lstm ? 0u : 1u);
        write_string(os, ckpt.config.dump());
        write_string(os, ckpt.rng_state);
        write_u64(os, static_cast<std::uint64_t>(ckpt.opt_step));
        write_u64(os, static_cast<std::uint64_t>(ckpt.epochs_done));
        write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
        for (const auto& t : ckpt.tensors) write_tensor(os, t);
        write_u32(os, static_cast<std::uint32_t>(ckpt.opt_m.size()));
        for (std::size_t i = 0; i < ckpt.opt_m.size(); ++i) {
            write_tensor(os, ckpt.opt_m[i]);
            write_tensor(os, ckpt.opt_v[i]);
        }
        require(os.good(), "save_checkpoint: write failure on " + tmp);
    }
    require(std::rename(tmp.c_str(), path.c_str()) == 0,
            "save_checkpoint: cannot move checkpoint into place at " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "load_checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    require(is.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
            "load_checkpoint: " + path + " is not a checkpoint file");
    Checkpoint ckpt;
    ckpt.kind = read_u32(is) == 0 ? ModelKind::lstm : ModelKind::transformer;
    ckpt.config = nlohmann::json::parse(read_string(is));
    ckpt.rng_state = read_string(is);
    ckpt.opt_step = static_cast<long>(read_u64(is));
    ckpt.epochs_done = static_cast<long>(read_u64(is));
    const std::uint32_t n = read_u32(is);
    for (std::uint32_t i = 0; i < n; ++i) ckpt.tensors.push_back(read_tensor(is));
    const std::uint32_t n_opt = read_u32(is);
    for (std::uint32_t i = 0; i < n_opt; ++i) {
        ckpt.opt_m.push_back(read_tensor(is));
        ckpt.opt_v.push_back(read_tensor(is));
    }
    require(is.good(), "load_checkpoint: truncated file " + path);
    return ckpt;
}

std::vector<NamedTensor> snapshot_params(const std::vector<const Param*>& params) {
    std::vector<NamedTensor> out;
    out.reserve(params.size());
    for (const Param* p : params) out.push_back({p->name, p->v});
    return out;
}

void restore_params(const std::vector<Param*>& params, const std::vector<NamedTensor>& tensors) {
    require(params.size() == tensors.size(), "restore_params: tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(params[i]->name == tensors[i].name,
                "restore_params: tensor name mismatch: expected " + params[i]->name + ", found " +
                    tensors[i].name);
        require(params[i]->v.rows() == tensors[i].data.rows() &&
                    params[i]->v.cols() == tensors[i].data.cols(),
                "restore_params: shape mismatch for " + params[i]->name);
        params[i]->v = tensors[i].data;
    }
}

Checkpoint make_checkpoint(ModelKind kind, const std::vector<Param*>& params,
                           const AdamState& opt, const nlohmann::json& config,
                           long epochs_done, const std::string& rng_state) {
    Checkpoint ckpt;
    ckpt.kind = kind;
    ckpt.config = config;
    ckpt.opt_step = opt.step;
    ckpt.epochs_done = epochs_done;
    ckpt.rng_state = rng_state;
    for (std::size_t i = 0; i < params.size(); ++i) {
        ckpt.tensors.push_back({params[i]->name, params[i]->v});
        if (opt.m.size() == params.size()) {
            ckpt.opt_m.push_back({params[i]->name, opt.m[i]});
            ckpt.opt_v.push_back({params[i]->name, opt.v[i]});
        }
    }
    return ckpt;
}

void restore_optimizer(const std::vector<Param*>& params, const Checkpoint& ckpt,
                       AdamState& opt) {
    opt.init(params);
    opt.step = ckpt.opt_step;
    require(ckpt.opt_m.size() == params.size(),
            "restore_optimizer: checkpoint has no optimizer moments");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(ckpt.opt_m[i].name == params[i]->name, "restore_optimizer: name mismatch");
        opt.m[i] = ckpt.opt_m[i].data;
        opt.v[i] = ckpt.opt_v[i].data;
    }
}

}  // namespace mdseq
