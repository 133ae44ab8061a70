#include "spikegen/experiments.hpp"
#include "spikegen/rmt.hpp"
#include "spikegen/rng.hpp"
#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef SPIKEGEN_BUILD_ID
#define SPIKEGEN_BUILD_ID "unknown"
#endif

namespace spikegen {

using nlohmann::json;

Method parse_method(const std::string& name) {
    if (name == "se") return Method::SE;
    if (name == "amp") return Method::AMP;
    if (name == "lamp") return Method::LAMP;
    if (name == "pca") return Method::PCA;
    if (name == "rmt") return Method::RMT;
    if (name == "mi") return Method::MI;
    throw std::invalid_argument("methods: unknown method '" + name + "' (se, amp, lamp, pca, rmt, mi)");
}

std::string method_name(Method m) {
    switch (m) {
    case Method::SE: return "se";
    case Method::AMP: return "amp";
    case Method::LAMP: return "lamp";
    case Method::PCA: return "pca";
    case Method::RMT: return "rmt";
    case Method::MI: return "mi";
    }
    return "?";
}

ModelSpec ExperimentConfig::model_spec() const {
    return model == ModelKind::Wishart ? ModelSpec::wishart(beta, prior_u) : ModelSpec::wigner();
}

bool ExperimentConfig::needs_instance() const {
    return methods.count(Method::AMP) || methods.count(Method::LAMP) || methods.count(Method::PCA);
}

void ExperimentConfig::validate() const {
    require(!alphas.empty(), "alpha: grid is empty");
    require(!deltas.empty(), "delta: grid is empty");
    for (double a : alphas) require(a > 0.0 && std::isfinite(a), "alpha: values must be > 0");
    for (double d : deltas) require(d > 0.0 && std::isfinite(d), "delta: values must be > 0");
    require(beta > 0.0 && std::isfinite(beta), "beta: must be > 0");
    require(!methods.empty(), "methods: empty set");
    require(seeds >= 1, "seeds: must be >= 1");
    require(workers >= 1, "workers: must be >= 1");
    require(p >= 0 && k >= 0, "p/k: must be positive");
    if (needs_instance()) require((p > 0) != (k > 0), "p/k: exactly one of p and k must be given");
    if (model == ModelKind::Wishart)
        require(!methods.count(Method::MI), "methods: mi is only available for the Wigner model");
    se.validate();
    amp.validate();
    require(eig.tol > 0.0 && eig.max_iter >= 1, "eig_tol/eig_max_iter: must be positive");
}

std::vector<double> parse_grid(const std::string& field, const std::string& text) {
    auto num = [&](const std::string& s) {
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        require(pos == s.size() && !s.empty(), field + ": '" + s + "' is not a number");
        return x;
    };
    std::vector<double> out;
    if (text.rfind("lin:", 0) == 0 || text.rfind("log:", 0) == 0) {
        std::vector<std::string> parts;
        std::stringstream ss(text.substr(4));
        std::string t;
        while (std::getline(ss, t, ':')) parts.push_back(t);
        require(parts.size() == 3, field + ": grid syntax is lin:a:b:n or log:a:b:n");
        const double a = num(parts[0]), b = num(parts[1]);
        const double nn = num(parts[2]);
        require(nn >= 1 && nn == std::floor(nn), field + ": grid size must be a positive integer");
        const int n = static_cast<int>(nn);
        const bool lg = text[1] == 'o';
        if (lg) require(a > 0.0 && b > 0.0, field + ": log grid needs positive ends");
        for (int i = 0; i < n; ++i) {
            const double t01 = n == 1 ? 0.0 : double(i) / (n - 1);
            out.push_back(lg ? std::exp(std::log(a) + t01 * (std::log(b) - std::log(a))) : a + t01 * (b - a));
        }
        return out;
    }
    std::stringstream ss(text);
    std::string t;
    while (std::getline(ss, t, ',')) {
        const auto b = t.find_first_not_of(" \t"), e = t.find_last_not_of(" \t");
        require(b != std::string::npos, field + ": empty list entry");
        out.push_back(num(t.substr(b, e - b + 1)));
    }
    require(!out.empty(), field + ": grid is empty");
    return out;
}

ExperimentConfig apply_key_values(const KeyValues& kv, ExperimentConfig cfg) {
    auto as_int = [](const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        long long x = 0;
        try {
            x = std::stoll(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        require(pos == v.size() && !v.empty(), key + ": '" + v + "' is not an integer");
        return x;
    };
    auto as_double = [](const std::string& key, const std::string& v) {
        auto g = parse_grid(key, v);
        require(g.size() == 1, key + ": expected a single number");
        return g[0];
    };
    double rho = cfg.latent.rho;
    std::string prior_name;
    for (const auto& [key, v] : kv) {
        if (key == "model") {
            if (v == "wigner") cfg.model = ModelKind::Wigner;
            else if (v == "wishart") cfg.model = ModelKind::Wishart;
            else throw std::invalid_argument("model: unknown model '" + v + "' (wigner, wishart)");
        } else if (key == "act" || key == "activation") {
            try {
                cfg.act = parse_activation(v);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(std::string("activation: ") + e.what());
            }
        } else if (key == "prior" || key == "latent") {
            prior_name = v;
        } else if (key == "rho") {
            rho = as_double(key, v);
        } else if (key == "prior_u") {
            try {
                cfg.prior_u = parse_prior(v);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(std::string("prior_u: ") + e.what());
            }
        } else if (key == "beta") {
            cfg.beta = as_double(key, v);
        } else if (key == "alpha") {
            cfg.alphas = parse_grid(key, v);
        } else if (key == "delta") {
            cfg.deltas = parse_grid(key, v);
        } else if (key == "p") {
            cfg.p = static_cast<int>(as_int(key, v));
        } else if (key == "k") {
            cfg.k = static_cast<int>(as_int(key, v));
        } else if (key == "seeds") {
            cfg.seeds = static_cast<int>(as_int(key, v));
        } else if (key == "seed") {
            const long long s = as_int(key, v);
            require(s >= 0, "seed: must be >= 0");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "methods") {
            cfg.methods.clear();
            std::stringstream ss(v);
            std::string t;
            while (std::getline(ss, t, ',')) cfg.methods.insert(parse_method(t));
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(as_int(key, v));
        } else if (key == "out") {
            cfg.out = v;
        } else if (key == "se_tol") {
            cfg.se.tol = as_double(key, v);
        } else if (key == "se_max_iter") {
            cfg.se.max_iter = static_cast<int>(as_int(key, v));
        } else if (key == "se_damping") {
            cfg.se.damping = as_double(key, v);
        } else if (key == "amp_tol") {
            cfg.amp.tol = as_double(key, v);
        } else if (key == "amp_max_iter") {
            cfg.amp.max_iter = static_cast<int>(as_int(key, v));
        } else if (key == "amp_damping") {
            cfg.amp.damping = as_double(key, v);
        } else if (key == "eig_tol") {
            cfg.eig.tol = as_double(key, v);
        } else if (key == "eig_max_iter") {
            cfg.eig.max_iter = static_cast<int>(as_int(key, v));
        } else {
            throw std::invalid_argument(key + ": unknown configuration key");
        }
    }
    if (!prior_name.empty() || kv.count("rho")) {
        try {
            cfg.latent = parse_prior(prior_name.empty() ? cfg.latent.name() : prior_name, rho);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string("prior: ") + e.what());
        }
    }
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["model"] = cfg.model == ModelKind::Wishart ? "wishart" : "wigner";
    j["activation"] = cfg.act.name();
    j["prior"] = cfg.latent.name();
    j["rho"] = cfg.latent.rho;
    if (cfg.model == ModelKind::Wishart) {
        j["beta"] = cfg.beta;
        j["prior_u"] = cfg.prior_u.name();
    }
    j["alpha"] = cfg.alphas;
    j["delta"] = cfg.deltas;
    j["p"] = cfg.p;
    j["k"] = cfg.k;
    j["seeds"] = cfg.seeds;
    j["seed"] = cfg.seed;
    std::vector<std::string> ms;
    for (auto m : cfg.methods) ms.push_back(method_name(m));
    j["methods"] = ms;
    j["workers"] = cfg.workers;
    j["se"] = {{"tol", cfg.se.tol}, {"max_iter", cfg.se.max_iter}, {"damping", cfg.se.damping}};
    j["amp"] = {{"tol", cfg.amp.tol}, {"max_iter", cfg.amp.max_iter}, {"damping", cfg.amp.damping}};
    j["eig"] = {{"tol", cfg.eig.tol}, {"max_iter", cfg.eig.max_iter}};
    return j;
}

Dims resolve_dims(const ExperimentConfig& cfg, double alpha) {
    require((cfg.p > 0) != (cfg.k > 0), "p/k: exactly one of p and k must be given");
    Dims d;
    std::ostringstream note;
    if (cfg.p > 0) {
        d.p = cfg.p;
        const double kk = cfg.p / alpha;
        d.k = std::max(1, static_cast<int>(std::lround(kk)));
        if (d.k != kk) note << "k = p/alpha = " << kk << " rounded to " << d.k << "; ";
    } else {
        d.k = cfg.k;
        const double pp = alpha * cfg.k;
        d.p = std::max(1, static_cast<int>(std::lround(pp)));
        if (d.p != pp) note << "p = alpha*k = " << pp << " rounded to " << d.p << "; ";
    }
    if (cfg.model == ModelKind::Wishart) {
        const double nn = cfg.beta * d.p;
        d.n = std::max(1, static_cast<int>(std::lround(nn)));
        if (d.n != nn) note << "n = beta*p = " << nn << " rounded to " << d.n << "; ";
    }
    d.note = note.str();
    return d;
}

json RunRecord::to_json() const {
    return {{"config", config}, {"build_id", build_id}, {"seed", seed}, {"metrics", metrics}, {"wall_time", wall_time}};
}

std::string build_id() { return SPIKEGEN_BUILD_ID; }

std::uint64_t instance_seed(std::uint64_t base, int i) {
    return i == 0 ? base : splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(i)));
}

SEPoint se_point(const ExperimentConfig& cfg, double alpha, double delta) {
    SEPoint r;
    const ModelSpec ms = cfg.model_spec();
    r.pair = se_fixed_point(cfg.se, delta, alpha, cfg.act, cfg.latent, ms);
    const PhasePoint& u = r.pair.uninformative;
    const PhasePoint& i = r.pair.informative;
    if (!u.converged || !i.converged) {
        r.chosen = i.converged || !u.converged ? i : u;
        r.inits_agree = false;
        return r;
    }
    r.inits_agree = r.pair.gap() <= 1e-8;
    if (r.inits_agree) {
        r.chosen = u;
    } else if (cfg.model == ModelKind::Wigner) {
        const double fu = i_rs_at(u.q_v_star, delta, alpha, cfg.act, cfg.latent, cfg.se.quad);
        const double fi = i_rs_at(i.q_v_star, delta, alpha, cfg.act, cfg.latent, cfg.se.quad);
        r.chosen = fu < fi ? u : i;
    } else {
        r.chosen = i;
    }
    return r;
}

namespace {

const char* init_name(InitKind k) { return k == InitKind::Informative ? "informative" : "uninformative"; }

json stats(const std::vector<double>& x) {
    double m = 0.0, s2 = 0.0;
    for (double v : x) m += v;
    m /= x.size();
    for (double v : x) s2 += (v - m) * (v - m);
    const double se = x.size() > 1 ? std::sqrt(s2 / (x.size() - 1) / x.size()) : 0.0;
    return {{"per_seed", x}, {"mean", m}, {"stderr", se}};
}

json spectral_json(const SpectralResult& r, const Vec& truth) {
    json j;
    j["eigenvalues"] = r.eigenvalues;
    j["overlap_sq"] = r.overlap_sq;
    j["residual"] = r.residual;
    j["iters"] = r.iters;
    j["converged"] = r.converged;
    if (!r.message.empty()) j["message"] = r.message;
    if (r.eigenvector.size() == truth.size() && truth.size() > 0) {
        // the eigenvector has |v|^2 = p; rescale to the norm of the truth
        const Vec v = r.eigenvector * (truth.norm() / r.eigenvector.norm());
        j["mse_v"] = align_and_mse(v, truth).mse;
    }
    return j;
}

} // namespace

RunRecord run_single(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const double alpha = cfg.alphas[0], delta = cfg.deltas[0];
    RunRecord rec;
    rec.config = to_json(cfg);
    rec.build_id = build_id();
    rec.seed = cfg.seed;
    json& m = rec.metrics;
    m["alpha"] = alpha;
    m["delta"] = delta;
    const ModelSpec ms = cfg.model_spec();
    const bool linear_wigner = cfg.model == ModelKind::Wigner && cfg.act.kind == ActKind::Linear;

    if (cfg.methods.count(Method::SE)) {
        const SEPoint sp = se_point(cfg, alpha, delta);
        m["se"] = {{"q_v", sp.chosen.q_v_star},
                   {"q_z", sp.chosen.state.q_z},
                   {"mmse_v", sp.chosen.mmse_v},
                   {"converged", sp.chosen.converged},
                   {"iters", sp.chosen.iters},
                   {"init", init_name(sp.chosen.init_used)},
                   {"inits_agree", sp.inits_agree},
                   {"q_v_uninformative", sp.pair.uninformative.q_v_star},
                   {"q_v_informative", sp.pair.informative.q_v_star}};
        if (cfg.act.zero_mean_output()) m["se"]["delta_c"] = delta_c(alpha, cfg.act, cfg.latent, ms);
    }
    if (cfg.methods.count(Method::MI)) {
        const MutualInfo mi = mutual_information(delta, alpha, cfg.act, cfg.latent, cfg.se.quad);
        m["mi"] = {{"i_rs", mi.i_rs}, {"q_v", mi.q_v_star}};
    }
    if (cfg.methods.count(Method::RMT)) {
        if (cfg.act.kind != ActKind::Linear) {
            m["rmt"] = {{"available", false}, {"message", "spectral predictions exist for the linear channel only"}};
        } else {
            const BaseLaw base = base_law(ms, delta);
            const EdgeResult e = solve_s_edge(base, alpha);
            m["rmt"] = {{"available", true},
                        {"lambda_max", e.lambda_max},
                        {"s_edge", e.s_edge},
                        {"nonpositive_support", e.nonpositive_support}};
            if (linear_wigner) m["rmt"]["epsilon"] = epsilon_overlap(alpha, delta);
        }
    }

    if (cfg.needs_instance()) {
        const Dims d = resolve_dims(cfg, alpha);
        if (!d.note.empty()) m["dims_note"] = d.note;
        m["p"] = d.p;
        m["k"] = d.k;
        if (cfg.model == ModelKind::Wishart) m["n"] = d.n;
        std::vector<double> amp_q, amp_mse, lamp_q, lamp_mse, pca_q, pca_mse;
        json amp_runs = json::array(), lamp_runs = json::array(), pca_runs = json::array();
        for (int s = 0; s < cfg.seeds; ++s) {
            const std::uint64_t seed = instance_seed(cfg.seed, s);
            const GenerativeModel gm = make_model(d.p, d.k, cfg.latent, cfg.act, seed);
            const Spike sp = generate_spike(gm, seed);
            SpikedInstance inst;
            if (cfg.model == ModelKind::Wishart)
                inst = sample_wishart(sample_separable(cfg.prior_u, d.n, seed), sp.v, delta, seed);
            else
                inst = sample_wigner(sp.v, delta, seed);
            inst.truth.z = sp.z;

            if (cfg.methods.count(Method::AMP)) {
                const AmpResult r = cfg.model == ModelKind::Wishart
                                        ? amp_wishart_run(inst, gm, cfg.prior_u, cfg.amp, seed)
                                        : amp_wigner_run(inst, gm, cfg.amp, seed);
                const double q = r.overlap_trace.empty() ? 0.0 : std::abs(r.overlap_trace.back());
                amp_q.push_back(q);
                amp_mse.push_back(r.mse_v);
                json jr = {{"seed", seed}, {"q_v", q}, {"mse_v", r.mse_v}, {"iters", r.iters},
                           {"converged", r.converged}, {"diverged", r.diverged}};
                if (!r.message.empty()) jr["message"] = r.message;
                amp_runs.push_back(jr);
            }
            if (cfg.methods.count(Method::LAMP)) {
                const LampCoeffs co = lamp_coefficients(cfg.act, cfg.latent, ms);
                const LampOperator op = cfg.model == ModelKind::Wishart ? build_lamp_wishart(inst, gm, co)
                                                                        : build_lamp_wigner(inst, gm, co);
                EigOptions eo = cfg.eig;
                eo.seed = seed;
                json jr = spectral_json(leading_eigs(op, eo), sp.v);
                jr["seed"] = seed;
                lamp_q.push_back(jr["overlap_sq"].get<double>());
                if (jr.contains("mse_v")) lamp_mse.push_back(jr["mse_v"].get<double>());
                lamp_runs.push_back(jr);
            }
            if (cfg.methods.count(Method::PCA)) {
                EigOptions eo = cfg.eig;
                eo.seed = seed;
                json jr = spectral_json(pca_estimate(inst, eo), sp.v);
                jr["seed"] = seed;
                pca_q.push_back(jr["overlap_sq"].get<double>());
                pca_mse.push_back(jr["mse_v"].get<double>());
                pca_runs.push_back(jr);
            }
        }
        if (cfg.methods.count(Method::AMP)) m["amp"] = {{"q_v", stats(amp_q)}, {"mse_v", stats(amp_mse)}, {"runs", amp_runs}};
        if (cfg.methods.count(Method::LAMP)) {
            m["lamp"] = {{"overlap_sq", stats(lamp_q)}, {"runs", lamp_runs}};
            if (!lamp_mse.empty()) m["lamp"]["mse_v"] = stats(lamp_mse);
        }
        if (cfg.methods.count(Method::PCA)) m["pca"] = {{"overlap_sq", stats(pca_q)}, {"mse_v", stats(pca_mse)}, {"runs", pca_runs}};
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::string sweep_header() { return "alpha,delta,q_v,q_z,mmse_v,converged,iters,init"; }

void run_sweep(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    require(!cfg.needs_instance(), "methods: sweep runs state evolution only (se)");
    struct Pt {
        double a, d;
    };
    std::vector<Pt> pts;
    for (double a : cfg.alphas)
        for (double d : cfg.deltas) pts.push_back({a, d});
    std::mutex mu;
    out << sweep_header() << '\n' << std::flush;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pts.size(); i = next++) {
            const auto [a, d] = pts[i];
            std::string row;
            try {
                const SEPoint sp = se_point(cfg, a, d);
                const PhasePoint& c = sp.chosen;
                row = fmt_double(a) + "," + fmt_double(d) + "," + fmt_double(c.q_v_star) + "," + fmt_double(c.state.q_z) +
                      "," + fmt_double(c.mmse_v) + "," + (c.converged ? "1" : "0") + "," + std::to_string(c.iters) + "," +
                      init_name(c.init_used);
            } catch (const std::exception&) {
                row = fmt_double(a) + "," + fmt_double(d) + ",nan,nan,nan,error,0,none";
            }
            std::lock_guard<std::mutex> lk(mu);
            out << row << '\n' << std::flush;
        }
    };
    const int nw = std::min<int>(cfg.workers, static_cast<int>(pts.size()));
    std::vector<std::thread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

std::vector<RmtSeRow> compare_rmt_se(double alpha, const std::vector<double>& deltas, const SEConfig& se) {
    require(!deltas.empty(), "delta: grid is empty");
    require(alpha > 0.0 && std::isfinite(alpha), "alpha: must be > 0");
    ExperimentConfig cfg;
    cfg.act = Activation{ActKind::Linear};
    cfg.se = se;
    std::vector<RmtSeRow> rows;
    for (double d : deltas) {
        require(d > 0.0 && std::isfinite(d), "delta: values must be > 0");
        const double q = se_point(cfg, alpha, d).chosen.q_v_star;
        const double e = epsilon_overlap(alpha, d);
        rows.push_back({d, q, e, std::abs(q - e)});
    }
    return rows;
}

std::string compare_rmt_se_header() { return "delta,q_v_se,epsilon_rmt,abs_diff"; }

} // namespace spikegen
