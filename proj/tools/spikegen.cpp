// spikegen command line: single runs, sweeps and spectral predictions.
// Exit codes: 0 ok, 2 usage, 3 numerical failure.
#include "CLI11.hpp"
#include "spikegen/experiments.hpp"
#include "spikegen/io.hpp"
#include "spikegen/rmt.hpp"
#include <fstream>
#include <iostream>
#include <memory>

using namespace spikegen;

namespace {

constexpr int kUsage = 2;
constexpr int kNumerical = 3;

// Options shared by every subcommand. Values given on the command line
// override those of --config.
struct Common {
    std::string config;
    std::vector<std::string> sets;
    KeyValues flags;
};

void add_common(CLI::App* sub, Common& c, bool sampling) {
    sub->add_option("--config", c.config, "key=value configuration file");
    sub->add_option("--set", c.sets, "extra key=value override (repeatable)");
    auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(name, [&c, key](const std::string& v) { c.flags[key] = v; }, help);
    };
    flag("--model", "model", "wigner | wishart");
    flag("--act", "act", "linear | sign | relu");
    flag("--prior", "prior", "latent prior: gauss | rademacher");
    flag("--rho", "rho", "latent second moment");
    flag("--beta", "beta", "n/p (Wishart)");
    flag("--alpha", "alpha", "p/k: number, list a,b,c or lin:a:b:n / log:a:b:n");
    flag("--delta", "delta", "noise variance: number, list or grid");
    flag("--seed", "seed", "base seed");
    flag("--out", "out", "output path (default stdout)");
    flag("--workers", "workers", "worker threads (sweep)");
    if (sampling) {
        flag("--p", "p", "signal dimension");
        flag("--k", "k", "latent dimension");
        flag("--seeds", "seeds", "number of instances");
    }
}

ExperimentConfig resolve(const Common& c) {
    KeyValues kv;
    if (!c.config.empty()) kv = read_key_values(c.config);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        require(eq != std::string::npos && eq > 0, "--set: expected key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    for (const auto& [k, v] : c.flags) kv[k] = v;
    return apply_key_values(kv);
}

// stdout unless a path is given.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            require(file_->good(), "out: cannot open " + path);
        }
    }
    std::ostream& get() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

int run_method(const Common& c, Method m) {
    ExperimentConfig cfg = resolve(c);
    cfg.methods = {m};
    const RunRecord rec = run_single(cfg);
    Sink out(cfg.out);
    out.get() << rec.to_json().dump(2) << '\n';
    return 0;
}

int run_rmt(const Common& c, const std::string& what, const std::string& xgrid) {
    const ExperimentConfig cfg = resolve(c);
    require(cfg.act.kind == ActKind::Linear, "act: spectral predictions exist for the linear channel only");
    const ModelSpec ms = cfg.model_spec();
    const double alpha = cfg.alphas.at(0);
    Sink out(cfg.out);
    if (what == "density") {
        const double delta = cfg.deltas.at(0);
        const BaseLaw base = base_law(ms, delta);
        std::vector<double> xs;
        if (xgrid.empty()) {
            const double top = solve_s_edge(base, alpha).z_edge;
            for (int i = 0; i < 401; ++i) xs.push_back(-4.0 + i * (top + 0.5 + 4.0) / 400.0);
        } else {
            xs = parse_grid("x", xgrid);
        }
        const BulkDensity bd = bulk_density(base, alpha, xs);
        out.get() << "x,density\n";
        for (const auto& s : bd.samples) out.get() << fmt_double(s.x) << ',' << fmt_double(s.nu) << '\n';
        return 0;
    }
    out.get() << "delta,lambda_max,s_edge,epsilon\n";
    const bool wig = cfg.model == ModelKind::Wigner;
    for (double d : cfg.deltas) {
        const EdgeResult e = solve_s_edge(base_law(ms, d), alpha);
        out.get() << fmt_double(d) << ',' << fmt_double(e.lambda_max) << ',' << fmt_double(e.s_edge) << ','
                  << (wig ? fmt_double(epsilon_overlap(alpha, d)) : std::string("nan")) << '\n';
    }
    return 0;
}

int run_sweep_cmd(const Common& c) {
    ExperimentConfig cfg = resolve(c);
    cfg.methods = {Method::SE};
    Sink out(cfg.out);
    run_sweep(cfg, out.get());
    return 0;
}

int run_compare(const Common& c) {
    const ExperimentConfig cfg = resolve(c);
    require(cfg.act.kind == ActKind::Linear && cfg.model == ModelKind::Wigner,
            "act: compare-rmt-se is defined for the linear Wigner model");
    const auto rows = compare_rmt_se(cfg.alphas.at(0), cfg.deltas, cfg.se);
    Sink out(cfg.out);
    out.get() << compare_rmt_se_header() << '\n';
    for (const auto& r : rows)
        out.get() << fmt_double(r.delta) << ',' << fmt_double(r.q_v_se) << ',' << fmt_double(r.epsilon) << ','
                  << fmt_double(r.diff) << '\n';
    return 0;
}

Mat load_matrix(const std::string& path) {
    const bool bin = path.size() > 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
    return bin ? read_matrix_bin(path) : read_matrix_csv(path);
}

int run_cov_lamp(const Common& c, const std::string& spikes, const std::string& obs, const std::string& truth_path,
                 const std::string& json_path) {
    const ExperimentConfig cfg = resolve(c);
    const Mat S = empirical_second_moment(load_matrix(spikes));
    const Mat Y = load_matrix(obs);
    Vec truth;
    if (!truth_path.empty()) truth = read_vector_csv(truth_path);
    EigOptions eo = cfg.eig;
    eo.seed = cfg.seed;
    const SpectralResult r = leading_eigs(build_cov_lamp(Y, S, cfg.deltas.at(0), truth), eo);
    nlohmann::json j = {{"eigenvalues", r.eigenvalues}, {"residual", r.residual},
                        {"iters", r.iters},             {"converged", r.converged}};
    if (!truth_path.empty()) j["overlap_sq"] = r.overlap_sq;
    if (!r.message.empty()) j["message"] = r.message;
    if (r.eigenvector.size() > 0) {
        if (cfg.out.empty()) {
            write_matrix_csv(std::cout, r.eigenvector);
        } else {
            write_vector_csv(cfg.out, r.eigenvector);
        }
    }
    if (json_path.empty()) {
        std::cerr << j.dump(2) << '\n';
    } else {
        std::ofstream f(json_path);
        require(f.good(), "json: cannot open " + json_path);
        f << j.dump(2) << '\n';
    }
    return r.converged ? 0 : kNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiked matrix estimation under generative priors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", build_id());

    Common c;
    struct Sub {
        const char* name;
        const char* help;
        Method m;
    };
    const Sub singles[] = {{"se", "state-evolution fixed point", Method::SE},
                           {"amp", "AMP on sampled instances", Method::AMP},
                           {"lamp", "LAMP spectral estimator", Method::LAMP},
                           {"pca", "PCA baseline", Method::PCA},
                           {"mi", "replica mutual information", Method::MI}};
    std::vector<std::pair<CLI::App*, Method>> single_cmds;
    for (const auto& s : singles) {
        auto* sub = app.add_subcommand(s.name, s.help);
        add_common(sub, c, s.m == Method::AMP || s.m == Method::LAMP || s.m == Method::PCA);
        single_cmds.emplace_back(sub, s.m);
    }

    auto* rmt = app.add_subcommand("rmt", "bulk density or edge/overlap curve of the linear LAMP spectrum");
    add_common(rmt, c, false);
    std::string what = "edge", xgrid;
    rmt->add_option("--what", what, "edge | density")->check(CLI::IsMember({"edge", "density"}));
    rmt->add_option("--x", xgrid, "density abscissae (list or grid)");

    auto* sweep = app.add_subcommand("sweep", "state evolution over an (alpha, delta) grid");
    add_common(sweep, c, false);

    auto* cmp = app.add_subcommand("compare-rmt-se", "RMT overlap against SE q_v (linear)");
    add_common(cmp, c, false);

    auto* cov = app.add_subcommand("cov-lamp", "covariance-LAMP from sample spikes");
    add_common(cov, c, false);
    std::string spikes, obs, truth, json_path;
    cov->add_option("--spikes", spikes, "CSV, one sample spike per row")->required();
    cov->add_option("--obs", obs, "observation matrix Y (CSV or .bin)")->required();
    cov->add_option("--truth", truth, "true spike for the overlap (CSV)");
    cov->add_option("--json", json_path, "metrics JSON path (default stderr)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        for (auto [sub, m] : single_cmds)
            if (sub->parsed()) return run_method(c, m);
        if (rmt->parsed()) return run_rmt(c, what, xgrid);
        if (sweep->parsed()) return run_sweep_cmd(c);
        if (cmp->parsed()) return run_compare(c);
        if (cov->parsed()) return run_cov_lamp(c, spikes, obs, truth, json_path);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}
