#include "mdseq/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace mdseq {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path);
    if (!is.good()) throw std::runtime_error("cannot open input file: " + path);
    return is;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os.good()) throw std::runtime_error("cannot open output file: " + path);
    return os;
}

// Parses "# key1=v1 key2=v2 ..." headers.
std::map<std::string, std::string> parse_header(const std::string& line, const std::string& path) {
    require(!line.empty() && line[0] == '#', path + ": missing '#' header line");
    std::map<std::string, std::string> kv;
    std::istringstream is(line.substr(1));
    std::string tok;
    while (is >> tok) {
        const auto eq = tok.find('=');
        require(eq != std::string::npos, path + ": malformed header token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

std::string header_value(const std::map<std::string, std::string>& kv, const std::string& key,
                         const std::string& path) {
    const auto it = kv.find(key);
    require(it != kv.end(), path + ": header missing '" + key + "'");
    return it->second;
}

}  // namespace

void write_frame_series(const std::string& path, const FrameSeries& fs) {
    fs.validate();
    auto os = open_out(path);
    os << "# dt_ps=" << format_double(fs.dt_ps) << " dim=" << fs.dim() << " seed=" << fs.seed
       << "\n";
    for (const auto& frame : fs.frames) {
        for (std::size_t d = 0; d < frame.size(); ++d) {
            if (d) os << ',';
            os << format_double(frame[d]);
        }
        os << '\n';
    }
}

FrameSeries read_frame_series(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), path + ": empty file");
    const auto kv = parse_header(line, path);
    FrameSeries out;
    out.dt_ps = parse_double(header_value(kv, "dt_ps", path));
    const int dim = std::stoi(header_value(kv, "dim", path));
    out.seed = std::stoull(header_value(kv, "seed", path));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> frame;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) frame.push_back(parse_double(cell));
        require(static_cast<int>(frame.size()) == dim,
                path + ": frame dimension mismatch near '" + line + "'");
        out.frames.push_back(std::move(frame));
    }
    out.validate();
    return out;
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
    traj.validate();
    auto os = open_out(path);
    os << "# dt_ps=" << format_double(traj.dt_ps) << " n_states=" << traj.n_states << "\n";
    for (int s : traj.states) os << s << '\n';
}

Trajectory read_trajectory(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), path + ": empty file");
    const auto kv = parse_header(line, path);
    Trajectory out;
    out.dt_ps = parse_double(header_value(kv, "dt_ps", path));
    out.n_states = std::stoi(header_value(kv, "n_states", path));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.states.push_back(std::stoi(line));
    }
    out.validate();
    return out;
}

void write_cluster_model(const std::string& path, const ClusterModel& model) {
    auto os = open_out(path);
    os << "# metric=" << model.metric << " k=" << model.center_frames.size()
       << " radius=" << format_double(model.radius) << "\n";
    for (int idx : model.center_frames) os << idx << '\n';
}

ClusterModel read_cluster_model(const std::string& path, const FrameSeries& source) {
    auto is = open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), path + ": empty file");
    const auto kv = parse_header(line, path);
    ClusterModel model;
    model.metric = header_value(kv, "metric", path);
    const int k = std::stoi(header_value(kv, "k", path));
    model.radius = parse_double(header_value(kv, "radius", path));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const int idx = std::stoi(line);
        require(idx >= 0 && idx < static_cast<int>(source.size()),
                path + ": center index out of range of the source frames");
        model.center_frames.push_back(idx);
        model.centers.push_back(source.frames[idx]);
    }
    require(static_cast<int>(model.center_frames.size()) == k,
            path + ": center count disagrees with header");
    return model;
}

void write_lumping_map(const std::string& path, const LumpingMap& map) {
    map.validate();
    auto os = open_out(path);
    os << "# n_micro=" << map.n_micro << " n_macro=" << map.n_macro << "\n";
    for (int a : map.assignment) os << a << '\n';
}

LumpingMap read_lumping_map(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), path + ": empty file");
    const auto kv = parse_header(line, path);
    LumpingMap map;
    map.n_micro = std::stoi(header_value(kv, "n_micro", path));
    map.n_macro = std::stoi(header_value(kv, "n_macro", path));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        map.assignment.push_back(std::stoi(line));
    }
    map.validate();
    return map;
}

void write_its_csv(const std::string& path, const ItsTable& table, const Eigen::MatrixXd* stds) {
    auto os = open_out(path);
    const int k = static_cast<int>(table.its.cols());
    os << "lag_ps";
    for (int i = 1; i <= k; ++i) os << ",its_" << i;
    if (stds)
        for (int i = 1; i <= k; ++i) os << ",its_" << i << "_std";
    os << '\n';
    for (std::size_t l = 0; l < table.lag_ps.size(); ++l) {
        os << format_double(table.lag_ps[l]);
        for (int i = 0; i < k; ++i) os << ',' << format_double(table.its(l, i));
        if (stds)
            for (int i = 0; i < k; ++i) os << ',' << format_double((*stds)(l, i));
        os << '\n';
    }
}

void write_mfpt_csv(const std::string& path, const Eigen::MatrixXd& mfpt,
                    const std::vector<int>& labels, const Eigen::MatrixXd* stds) {
    auto os = open_out(path);
    os << "from_state,to_state,mfpt_ps,std\n";
    for (int i = 0; i < mfpt.rows(); ++i)
        for (int j = 0; j < mfpt.cols(); ++j) {
            if (i == j) continue;
            os << labels[i] << ',' << labels[j] << ',' << format_double(mfpt(i, j)) << ',';
            if (stds) os << format_double((*stds)(i, j));
            os << '\n';
        }
}

void write_rle_vocab(const std::string& path, const RunLengthVocab& vocab) {
    auto os = open_out(path);
    os << "# n_states=" << vocab.n_states << " max_run_length=" << vocab.max_run_length << "\n";
    for (const auto& tok : vocab.id_to_token) os << tok.state << ' ' << tok.length << '\n';
}

RunLengthVocab read_rle_vocab(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), path + ": empty file");
    const auto kv = parse_header(line, path);
    RunLengthVocab vocab;
    vocab.n_states = std::stoi(header_value(kv, "n_states", path));
    vocab.max_run_length = std::stoi(header_value(kv, "max_run_length", path));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        RleToken tok;
        ls >> tok.state >> tok.length;
        require(!ls.fail(), path + ": malformed token line '" + line + "'");
        vocab.token_to_id[{tok.state, tok.length}] = static_cast<int>(vocab.id_to_token.size());
        vocab.id_to_token.push_back(tok);
    }
    return vocab;
}

void write_text_file(const std::string& path, const std::string& content) {
    auto os = open_out(path);
    os << content;
}

std::string read_text_file(const std::string& path) {
    auto is = open_in(path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string> list_matching(const std::string& dir, const std::string& prefix,
                                       const std::string& suffix) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() >= suffix.size() &&
            name.substr(name.size() - suffix.size()) == suffix && name.rfind(prefix, 0) == 0)
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

std::vector<Trajectory> read_trajectory_set(const std::string& path) {
    std::vector<Trajectory> out;
    if (fs::is_directory(path)) {
        for (const auto& f : list_matching(path, "traj", ".txt"))
            out.push_back(read_trajectory(f));
        require(!out.empty(), "no trajectory files (traj*.txt) in directory: " + path);
    } else {
        out.push_back(read_trajectory(path));
    }
    return out;
}

std::vector<FrameSeries> read_frame_series_set(const std::string& path) {
    std::vector<FrameSeries> out;
    if (fs::is_directory(path)) {
        for (const auto& f : list_matching(path, "frames", ".csv"))
            out.push_back(read_frame_series(f));
        require(!out.empty(), "no frame files (frames*.csv) in directory: " + path);
    } else {
        out.push_back(read_frame_series(path));
    }
    return out;
}

}  // namespace mdseq
