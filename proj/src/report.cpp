#include "mdseq/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mdseq/bootstrap.hpp"
#include "mdseq/svg.hpp"

namespace mdseq {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bootstrap seeds derive from the ensemble content, not from which side of
// the comparison it sits on, so swapping reference and generated swaps the
// paired columns and nothing else.
std::uint64_t ensemble_seed(const std::vector<Trajectory>& ensemble, std::uint64_t base) {
    std::string blob = std::to_string(base);
    for (const auto& t : ensemble) {
        blob += '|' + std::to_string(t.size());
        for (int s : t.states) blob += ',' + std::to_string(s);
    }
    return fnv1a64(blob);
}

Eigen::VectorXd state_histogram(const std::vector<Trajectory>& ensemble, int n_states) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n_states);
    for (const auto& t : ensemble)
        for (int s : t.states) h(s) += 1.0;
    return h;
}

struct SideStats {
    std::vector<double> fe_mean, fe_std;
    std::vector<double> its_mean, its_std;    // flattened [lag][k]
    std::vector<double> mfpt_mean, mfpt_std;  // flattened [from][to]
};

std::vector<double> its_flat(const std::vector<Trajectory>& ens, const ReportConfig& cfg) {
    const ItsTable table = implied_timescales(ens, cfg.lags, cfg.k_its, /*reversible=*/true);
    std::vector<double> flat;
    for (std::size_t l = 0; l < cfg.lags.size(); ++l)
        for (int i = 0; i < cfg.k_its; ++i) flat.push_back(table.its(l, i));
    return flat;
}

std::vector<double> mfpt_flat(const std::vector<Trajectory>& ens, const ReportConfig& cfg,
                              int n_states) {
    const CountMatrix cm = count_transitions(ens, cfg.mfpt_lag);
    const TransitionModel model = transition_matrix(cm, /*reversible=*/false);
    const Eigen::MatrixXd m = mfpt(model);
    std::vector<double> flat(static_cast<std::size_t>(n_states) * n_states, kNaN);
    for (int i = 0; i < model.n(); ++i)
        for (int j = 0; j < model.n(); ++j)
            flat[static_cast<std::size_t>(model.state_labels[i]) * n_states +
                 model.state_labels[j]] = m(i, j);
    return flat;
}

SideStats side_stats(const std::vector<Trajectory>& ens, const ReportConfig& cfg, int n_states) {
    const std::uint64_t seed = ensemble_seed(ens, cfg.seed);
    SideStats s;

    const auto fe_metric = [&](const std::vector<Trajectory>& e) {
        const Eigen::VectorXd f = free_energy(state_histogram(e, n_states));
        return std::vector<double>(f.data(), f.data() + f.size());
    };
    const VectorBootstrapResult fe = bootstrap_vector_metric(ens, fe_metric, cfg.n_boot, seed);
    s.fe_mean = fe.mean;
    s.fe_std = fe.std;

    const auto its_metric = [&](const std::vector<Trajectory>& e) { return its_flat(e, cfg); };
    const VectorBootstrapResult its = bootstrap_vector_metric(ens, its_metric, cfg.n_boot, seed);
    s.its_mean = its.mean;
    s.its_std = its.std;

    const auto mfpt_metric = [&](const std::vector<Trajectory>& e) {
        return mfpt_flat(e, cfg, n_states);
    };
    const VectorBootstrapResult mf = bootstrap_vector_metric(ens, mfpt_metric, cfg.n_boot, seed);
    s.mfpt_mean = mf.mean;
    s.mfpt_std = mf.std;
    return s;
}

}  // namespace

EvalReport build_report(const std::vector<Trajectory>& reference,
                        const std::vector<Trajectory>& generated, const ReportConfig& cfg) {
    require(!reference.empty() && !generated.empty(), "build_report: empty ensemble");
    const int n_states = reference.front().n_states;
    const double dt = reference.front().dt_ps;
    for (const auto& t : reference)
        require(t.n_states == n_states && t.dt_ps == dt, "build_report: mixed reference alphabet");
    for (const auto& t : generated)
        require(t.n_states == n_states,
                "build_report: generated alphabet does not match the reference");
    for (const auto& t : generated)
        require(t.dt_ps == dt, "build_report: generated dt does not match the reference");

    EvalReport report;
    report.n_states = n_states;
    report.dt_ps = dt;
    report.config = cfg;
    for (int lag : cfg.lags) report.lag_ps.push_back(lag * dt);

    const SideStats ref = side_stats(reference, cfg, n_states);
    const SideStats gen = side_stats(generated, cfg, n_states);

    report.free_energy.resize(n_states);
    for (int i = 0; i < n_states; ++i)
        report.free_energy[i] = {ref.fe_mean[i], ref.fe_std[i], gen.fe_mean[i], gen.fe_std[i]};

    report.its.assign(cfg.lags.size(), std::vector<PairedValue>(cfg.k_its));
    for (std::size_t l = 0; l < cfg.lags.size(); ++l)
        for (int i = 0; i < cfg.k_its; ++i) {
            const std::size_t idx = l * cfg.k_its + i;
            report.its[l][i] = {ref.its_mean[idx], ref.its_std[idx], gen.its_mean[idx],
                                gen.its_std[idx]};
        }

    report.mfpt.assign(n_states, std::vector<PairedValue>(n_states));
    for (int i = 0; i < n_states; ++i)
        for (int j = 0; j < n_states; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * n_states + j;
            report.mfpt[i][j] = {ref.mfpt_mean[idx], ref.mfpt_std[idx], gen.mfpt_mean[idx],
                                 gen.mfpt_std[idx]};
        }
    return report;
}

namespace {

nlohmann::json paired_json(const PairedValue& v) {
    return {{"ref", v.ref}, {"ref_std", v.ref_std}, {"gen", v.gen}, {"gen_std", v.gen_std}};
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["n_states"] = n_states;
    j["dt_ps"] = dt_ps;
    j["lags"] = config.lags;
    j["lag_ps"] = lag_ps;
    j["k_its"] = config.k_its;
    j["mfpt_lag"] = config.mfpt_lag;
    j["n_boot"] = config.n_boot;
    j["seed"] = config.seed;
    j["provenance"] = config.provenance;
    j["free_energy"] = nlohmann::json::array();
    for (int i = 0; i < n_states; ++i) {
        nlohmann::json row = paired_json(free_energy[i]);
        row["state"] = i;
        j["free_energy"].push_back(row);
    }
    j["its"] = nlohmann::json::array();
    for (std::size_t l = 0; l < its.size(); ++l) {
        nlohmann::json row;
        row["lag_ps"] = lag_ps[l];
        row["timescales"] = nlohmann::json::array();
        for (const auto& v : its[l]) row["timescales"].push_back(paired_json(v));
        j["its"].push_back(row);
    }
    j["mfpt"] = nlohmann::json::array();
    for (int i = 0; i < n_states; ++i)
        for (int k = 0; k < n_states; ++k) {
            if (i == k) continue;
            nlohmann::json row = paired_json(mfpt[i][k]);
            row["from"] = i;
            row["to"] = k;
            j["mfpt"].push_back(row);
        }
    return j;
}

void write_report(const std::string& dir, const EvalReport& report) {
    fs::create_directories(dir + "/plots");

    {
        std::ofstream os(dir + "/report.json");
        require(os.good(), "write_report: cannot open " + dir + "/report.json");
        os << report.to_json().dump(2) << '\n';
    }
    {
        std::ofstream os(dir + "/free_energy.csv");
        os << "state,f_ref,f_ref_std,f_gen,f_gen_std\n";
        for (int i = 0; i < report.n_states; ++i) {
            const auto& v = report.free_energy[i];
            os << i << ',' << format_double(v.ref) << ',' << format_double(v.ref_std) << ','
               << format_double(v.gen) << ',' << format_double(v.gen_std) << '\n';
        }
    }
    {
        std::ofstream os(dir + "/its.csv");
        os << "lag_ps";
        for (int i = 1; i <= report.config.k_its; ++i)
            os << ",its_" << i << "_ref,its_" << i << "_ref_std,its_" << i << "_gen,its_" << i
               << "_gen_std";
        os << '\n';
        for (std::size_t l = 0; l < report.its.size(); ++l) {
            os << format_double(report.lag_ps[l]);
            for (const auto& v : report.its[l])
                os << ',' << format_double(v.ref) << ',' << format_double(v.ref_std) << ','
                   << format_double(v.gen) << ',' << format_double(v.gen_std);
            os << '\n';
        }
    }
    {
        std::ofstream os(dir + "/mfpt.csv");
        os << "from_state,to_state,ref_mfpt_ps,ref_std,gen_mfpt_ps,gen_std\n";
        for (int i = 0; i < report.n_states; ++i)
            for (int j = 0; j < report.n_states; ++j) {
                if (i == j) continue;
                const auto& v = report.mfpt[i][j];
                os << i << ',' << j << ',' << format_double(v.ref) << ','
                   << format_double(v.ref_std) << ',' << format_double(v.gen) << ','
                   << format_double(v.gen_std) << '\n';
            }
    }

    for (int i = 0; i < report.config.k_its; ++i) {
        SvgSeries ref_series{"reference", {}};
        SvgSeries gen_series{"generated", {}};
        for (std::size_t l = 0; l < report.its.size(); ++l) {
            ref_series.points.push_back({report.lag_ps[l], report.its[l][i].ref});
            gen_series.points.push_back({report.lag_ps[l], report.its[l][i].gen});
        }
        const std::string svg =
            svg_line_chart("implied timescale " + std::to_string(i + 1), "lag (ps)", "ITS (ps)",
                           {ref_series, gen_series});
        std::ofstream os(dir + "/plots/its_" + std::to_string(i + 1) + ".svg");
        os << svg;
    }
    {
        std::vector<std::string> categories;
        std::vector<double> ref_vals, gen_vals;
        for (int i = 0; i < report.n_states; ++i) {
            categories.push_back(std::to_string(i));
            ref_vals.push_back(report.free_energy[i].ref);
            gen_vals.push_back(report.free_energy[i].gen);
        }
        const std::string svg =
            svg_bar_chart("free energy by state", "state", "-ln(population)", categories,
                          {"reference", "generated"}, {ref_vals, gen_vals});
        std::ofstream os(dir + "/plots/free_energy.svg");
        os << svg;
    }
}

}  // namespace mdseq
