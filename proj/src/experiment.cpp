#include "kvnet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "kvnet/error.hpp"
#include "kvnet/hardy.hpp"
#include "kvnet/spectral.hpp"

namespace kvnet {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) fail(path.empty() ? "config" : path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            fail(join(path, it.key()), "unknown field");
    }
}

double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

double get_number(const json& j, const std::string& key, const std::string& path, double def) {
    if (!j.contains(key)) return def;
    return number_at(j.at(key), join(path, key));
}

double require_number(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) fail(join(path, key), "required field missing");
    return number_at(j.at(key), join(path, key));
}

int get_int(const json& j, const std::string& key, const std::string& path, int def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& key, const std::string& path, std::uint64_t def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_unsigned()) fail(join(path, key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& key, const std::string& path, bool def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path, const std::string& def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
}

DampingProfile parse_damping(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "params"});
    if (!j.contains("kind")) fail(join(path, "kind"), "required field missing");
    const std::string kind = get_string(j, "kind", path, "");
    const json params = j.contains("params") ? j.at("params") : json::object();
    const std::string pp = join(path, "params");
    DampingProfile::Variant v;
    if (kind == "zero") {
        check_keys(params, pp, {});
        v = ZeroDamping{};
    } else if (kind == "power") {
        check_keys(params, pp, {"alpha", "kappa"});
        v = PowerLaw{require_number(params, "alpha", pp), get_number(params, "kappa", pp, 1.0)};
    } else if (kind == "logpower") {
        check_keys(params, pp, {"alpha_prime", "beta", "kappa"});
        v = LogPower{require_number(params, "alpha_prime", pp), require_number(params, "beta", pp),
                     get_number(params, "kappa", pp, 1.0)};
    } else if (kind == "piecewise") {
        check_keys(params, pp, {"a", "b", "level"});
        v = PiecewiseConstant{require_number(params, "a", pp), require_number(params, "b", pp),
                              require_number(params, "level", pp)};
    } else if (kind == "table") {
        check_keys(params, pp, {"points"});
        const std::string tp = join(pp, "points");
        if (!params.contains("points") || !params.at("points").is_array()) fail(tp, "expected an array of [x, d] pairs");
        Tabulated t;
        int i = 0;
        for (const json& pt : params.at("points")) {
            const std::string ip = tp + "[" + std::to_string(i++) + "]";
            if (!pt.is_array() || pt.size() != 2) fail(ip, "expected [x, d]");
            t.points.emplace_back(number_at(pt[0], ip + "[0]"), number_at(pt[1], ip + "[1]"));
        }
        v = std::move(t);
    } else {
        fail(join(path, "kind"), "unknown damping kind '" + kind + "' (zero, power, logpower, piecewise, table)");
    }
    try {
        return DampingProfile(std::move(v));
    } catch (const ConfigError& e) {
        fail(pp, e.what());
    }
}

StarNetwork parse_network(const json& j) {
    const std::string path = "network";
    check_keys(j, path, {"l0", "edges"});
    const double l0 = get_number(j, "l0", path, 1.0);
    if (!j.contains("edges") || !j.at("edges").is_array()) fail("network.edges", "expected an array of edges");
    std::vector<DampedEdge> edges;
    int i = 0;
    for (const json& e : j.at("edges")) {
        const std::string ep = "network.edges[" + std::to_string(i++) + "]";
        check_keys(e, ep, {"length", "damping"});
        const double len = get_number(e, "length", ep, 1.0);
        if (!e.contains("damping")) fail(join(ep, "damping"), "required field missing");
        edges.push_back({len, parse_damping(e.at("damping"), join(ep, "damping"))});
    }
    try {
        return StarNetwork(l0, std::move(edges));
    } catch (const ConfigError& e) {
        fail(path, e.what());
    }
}

InitialKind parse_initial(const std::string& s, const std::string& path) {
    if (s == "eigen_lowfreq") return InitialKind::EigenLowFreq;
    if (s == "polynomial_bump") return InitialKind::PolynomialBump;
    if (s == "random_smooth") return InitialKind::RandomSmooth;
    fail(path, "unknown initial kind '" + s + "' (eigen_lowfreq, polynomial_bump, random_smooth)");
}

std::string initial_name(InitialKind k) {
    switch (k) {
        case InitialKind::EigenLowFreq: return "eigen_lowfreq";
        case InitialKind::PolynomialBump: return "polynomial_bump";
        case InitialKind::RandomSmooth: return "random_smooth";
    }
    return "?";
}

SimConfig parse_sim(const json& j) {
    const std::string path = "sim";
    check_keys(j, path, {"dt", "T", "initial", "k", "snapshot_stride", "csv_stride", "window", "seed", "modes"});
    SimConfig s;
    s.dt = get_number(j, "dt", path, s.dt);
    s.T = get_number(j, "T", path, s.T);
    s.initial = parse_initial(get_string(j, "initial", path, "random_smooth"), "sim.initial");
    s.k = get_int(j, "k", path, s.k);
    s.snapshot_stride = get_int(j, "snapshot_stride", path, s.snapshot_stride);
    s.csv_stride = get_int(j, "csv_stride", path, s.csv_stride);
    s.seed = get_u64(j, "seed", path, s.seed);
    s.modes = get_int(j, "modes", path, s.modes);
    if (j.contains("window")) {
        const json& w = j.at("window");
        if (!w.is_array() || w.size() != 2) fail("sim.window", "expected [f0, f1]");
        s.window = {number_at(w[0], "sim.window[0]"), number_at(w[1], "sim.window[1]")};
    }
    if (!(s.dt > 0.0)) fail("sim.dt", "must be positive");
    if (!(s.T >= s.dt)) fail("sim.T", "must be at least dt");
    if (s.k < 0) fail("sim.k", "must be nonnegative");
    if (s.csv_stride < 1) fail("sim.csv_stride", "must be at least 1");
    if (s.modes < 1) fail("sim.modes", "must be at least 1");
    if (!(s.window.first >= 0.0 && s.window.first < s.window.second && s.window.second <= 1.0))
        fail("sim.window", "need 0 <= f0 < f1 <= 1");
    return s;
}

SpectralConfig parse_spectral(const json& j, double cutoff) {
    const std::string path = "spectral";
    check_keys(j, path, {"lambda_min", "lambda_max", "points", "spectrum", "sweep", "envelope", "scan_step"});
    SpectralConfig s;
    s.lambda_min = get_number(j, "lambda_min", path, s.lambda_min);
    s.points = get_int(j, "points", path, s.points);
    s.spectrum = get_bool(j, "spectrum", path, s.spectrum);
    s.sweep = get_bool(j, "sweep", path, s.sweep);
    s.envelope = get_bool(j, "envelope", path, s.envelope);
    s.scan_step = get_number(j, "scan_step", path, s.scan_step);
    if (j.contains("lambda_max")) {
        const json& v = j.at("lambda_max");
        if (v.is_string()) {
            if (v.get<std::string>() != "auto") fail("spectral.lambda_max", "expected a number or \"auto\"");
        } else {
            s.lambda_max = number_at(v, "spectral.lambda_max");
        }
    }
    if (!(s.lambda_min > 0.0)) fail("spectral.lambda_min", "must be positive");
    if (s.points < 2) fail("spectral.points", "must be at least 2");
    if (!(s.scan_step > 0.0)) fail("spectral.scan_step", "must be positive");
    const double top = s.lambda_max.value_or(cutoff);
    if (s.lambda_max && *s.lambda_max > cutoff) {
        std::ostringstream os;
        os.precision(17);
        os << "lambda_max " << *s.lambda_max << " exceeds the mesh cutoff 0.5*pi/h_max = " << cutoff;
        fail("spectral.lambda_max", os.str());
    }
    if (!(top > s.lambda_min)) fail("spectral.lambda_min", "must lie below lambda_max");
    return s;
}

WeightSpec parse_weight(const json& j, const std::string& path, const StarNetwork& net, WeightSpec def) {
    check_keys(j, path, {"kind", "p", "c", "edge"});
    WeightSpec w = def;
    w.kind = get_string(j, "kind", path, def.kind);
    w.p = get_number(j, "p", path, def.p);
    w.c = get_number(j, "c", path, def.c);
    w.edge = get_int(j, "edge", path, def.edge);
    if (w.kind != "power" && w.kind != "constant" && w.kind != "profile")
        fail(join(path, "kind"), "unknown weight kind '" + w.kind + "' (power, constant, profile)");
    if (w.kind != "profile" && !(w.c > 0.0)) fail(join(path, "c"), "must be positive");
    if (w.kind == "profile" && (w.edge < 1 || w.edge > net.damped_count()))
        fail(join(path, "edge"), "must name a damped edge 1.." + std::to_string(net.damped_count()));
    return w;
}

HardyConfig parse_hardy(const json& j, const StarNetwork& net) {
    const std::string path = "hardy";
    check_keys(j, path, {"a", "rho1", "rho2", "L", "trials", "seed"});
    HardyConfig h;
    if (j.contains("a")) h.a = parse_weight(j.at("a"), "hardy.a", net, h.a);
    if (j.contains("rho1")) h.rho1 = parse_weight(j.at("rho1"), "hardy.rho1", net, h.rho1);
    if (j.contains("rho2")) h.rho2 = parse_weight(j.at("rho2"), "hardy.rho2", net, h.rho2);
    h.L = get_number(j, "L", path, h.L);
    h.trials = get_int(j, "trials", path, h.trials);
    h.seed = get_u64(j, "seed", path, h.seed);
    if (!(h.L > 0.0)) fail("hardy.L", "must be positive");
    if (h.trials < 0) fail("hardy.trials", "must be nonnegative");
    if (h.a.kind == "profile" && net.profile(h.a.edge).is_zero())
        fail("hardy.a.edge", "the edge is undamped, so the weight vanishes");
    return h;
}

WeightFunction make_weight(const WeightSpec& w, const StarNetwork& net) {
    if (w.kind == "power") return WeightFunction::power(w.p, w.c);
    if (w.kind == "constant") return WeightFunction::constant(w.c);
    return WeightFunction::from_profile(net.profile(w.edge));
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
        if (!out_) throw Error("cannot write " + path.string());
        out_ << header << '\n';
    }
    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) out_ << ',';
            out_ << format_number(v);
            first = false;
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

std::string describe(const ValidationReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "edge " << r.edge << ": A1 " << (r.a1_ok ? "ok" : "FAILED");
    if (r.a1_ok) os << " on [" << r.witness_a << ", " << r.witness_b << "]";
    if (r.a2_applicable) {
        os << "; A2 " << (r.a2_ok ? "ok" : "FAILED") << " alpha=" << r.alpha_hat << " kappa=" << r.kappa_hat;
        if (r.kappa_mode == KappaMode::LogDivergent) os << " (log-divergent ratio)";
    }
    if (r.a3_applicable) os << "; A3 " << (r.a3_ok ? "ok" : "FAILED") << " eta=" << r.eta_hat;
    if (!r.note.empty()) os << "; " << r.note;
    std::string out = os.str();
    while (!out.empty() && (out.back() == ' ' || out.back() == ';')) out.pop_back();
    return out;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

void write_coordinate_matrix(const std::filesystem::path& path, const SparseMatrix& matrix) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "# " << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
    for (int k = 0; k < matrix.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << format_number(it.value()) << '\n';
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    check_keys(j, "", {"network", "mesh", "sim", "spectral", "hardy", "out"});
    ExperimentConfig c;
    if (!j.contains("network")) fail("network", "required field missing");
    c.network = parse_network(j.at("network"));
    if (j.contains("mesh")) {
        const json& m = j.at("mesh");
        check_keys(m, "mesh", {"n_per_edge", "grading"});
        c.mesh.n_per_edge = get_int(m, "n_per_edge", "mesh", c.mesh.n_per_edge);
        c.mesh.grading = get_number(m, "grading", "mesh", c.mesh.grading);
    }
    if (c.mesh.n_per_edge < 2) fail("mesh.n_per_edge", "must be at least 2");
    if (!(c.mesh.grading >= 1.0)) fail("mesh.grading", "must be at least 1");
    if (j.contains("sim")) {
        c.sim = parse_sim(j.at("sim"));
        c.has_sim = true;
    }
    if (j.contains("spectral")) {
        const Mesh mesh = build_mesh(c.network, c.mesh.n_per_edge, c.mesh.grading);
        c.spectral = parse_spectral(j.at("spectral"), 0.5 * std::numbers::pi / mesh.h_max());
        c.has_spectral = true;
    }
    if (j.contains("hardy")) {
        c.hardy = parse_hardy(j.at("hardy"), c.network);
        c.has_hardy = true;
    }
    c.out = get_string(j, "out", "", c.out);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string task_name(Task t) {
    switch (t) {
        case Task::Validate: return "validate";
        case Task::Spectrum: return "spectrum";
        case Task::Sweep: return "sweep";
        case Task::Simulate: return "simulate";
        case Task::Hardy: return "hardy";
    }
    return "?";
}

std::optional<double> network_alpha(const StarNetwork& network) {
    std::optional<double> best;
    auto take = [&](double a) { best = best ? std::min(*best, a) : a; };
    for (const auto& e : network.damped_edges()) {
        const auto& v = e.profile.params();
        if (const auto* p = std::get_if<PowerLaw>(&v)) {
            take(p->alpha);
        } else if (const auto* p = std::get_if<LogPower>(&v)) {
            take(p->alpha_prime);
        } else if (const auto* p = std::get_if<PiecewiseConstant>(&v)) {
            if (p->a == 0.0) take(0.0);
        } else if (std::holds_alternative<Tabulated>(v)) {
            try {
                const double a = estimate_alpha_kappa(e.profile, e.length).alpha;
                if (a >= 0.0 && a < 1.0) take(a);
            } catch (const Error&) {
            }
        }
    }
    return best;
}

RunReport run_experiment(const ExperimentConfig& config, std::vector<Task> tasks) {
    if (tasks.empty()) {
        tasks.push_back(Task::Validate);
        if (config.has_spectral && config.spectral.spectrum) tasks.push_back(Task::Spectrum);
        if (config.has_spectral && config.spectral.sweep) tasks.push_back(Task::Sweep);
        if (config.has_sim) tasks.push_back(Task::Simulate);
        if (config.has_hardy) tasks.push_back(Task::Hardy);
    }
    std::sort(tasks.begin(), tasks.end());
    tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());
    auto wants = [&](Task t) { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); };

    RunReport rep;
    rep.out_dir = config.out;
    std::filesystem::create_directories(rep.out_dir);
    const StarNetwork& net = config.network;
    const std::optional<double> alpha = network_alpha(net);
    std::optional<PredictedRates> rates;
    if (alpha) {
        rates = predicted_rates(*alpha);
        rep.headline["alpha"] = *alpha;
        rep.headline["gamma_predicted"] = rates->gamma;
        rep.headline["decay_order_predicted"] = rates->decay_order;
    }

    auto run = [&](const std::string& name, const std::function<void()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        TaskStatus st{name, "ok", "", 0.0};
        try {
            body();
        } catch (const std::exception& e) {
            st.status = "failed";
            st.message = e.what();
            rep.partial = true;
        }
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.tasks.push_back(st);
        return st.status == "ok";
    };
    auto skip = [&](const std::string& name, const std::string& why) {
        rep.tasks.push_back({name, "skipped", why, 0.0});
        rep.partial = true;
    };

    if (wants(Task::Validate)) {
        run("validate", [&] {
            bool all_ok = true;
            for (const auto& r : validate_assumptions(net)) {
                rep.validation_summary.push_back(describe(r));
                all_ok = all_ok && r.a1_ok && (!r.a2_applicable || r.a2_ok) && (!r.a3_applicable || r.a3_ok);
            }
            rep.headline["validation_ok"] = all_ok ? 1.0 : 0.0;
        });
    }

    const bool need_system = wants(Task::Spectrum) || wants(Task::Sweep) || wants(Task::Simulate);
    std::optional<AssembledSystem> sys;
    bool assembled = false;
    if (need_system) {
        assembled = run("assemble", [&] { sys = discretize(net, config.mesh.n_per_edge, config.mesh.grading); });
    }
    const std::string no_system = "assembly failed";

    const bool lowfreq = wants(Task::Simulate) && config.sim.initial == InitialKind::EigenLowFreq;
    std::optional<SpectrumReport> spectrum;
    if (wants(Task::Spectrum)) {
        if (!assembled) {
            skip("spectrum", no_system);
        } else {
            run("spectrum", [&] {
                SpectrumOptions opt;
                opt.eigenvectors = lowfreq;
                spectrum = compute_spectrum(*sys, opt);
                CsvWriter csv(rep.out_dir / "spectrum.csv", "re,im");
                for (const Complex& z : spectrum->eigenvalues) csv.row({z.real(), z.imag()});
                rep.manifest.push_back("spectrum.csv");
                rep.headline["spectral_abscissa"] = spectrum->abscissa;
                rep.headline["min_axis_distance"] = spectrum->min_axis_distance;
                rep.headline["near_axis_count"] = spectrum->near_axis_count;
                rep.headline["eigenvalue_count"] = static_cast<double>(spectrum->eigenvalues.size());
            });
        }
    }

    if (wants(Task::Sweep)) {
        if (!assembled) {
            skip("sweep", no_system);
        } else {
            run("sweep", [&] {
                if (net.undamped())
                    throw ConfigError(
                        "sweep rejected: every edge is undamped, so i*lambda can hit an eigenfrequency "
                        "and the resolvent norm is unbounded");
                const double top = config.spectral.lambda_max.value_or(mesh_cutoff(*sys));
                SweepOptions opt;
                opt.parallel = config.threads > 1;
                opt.threads = config.threads;
                opt.envelope = config.spectral.envelope;
                opt.scan_step = config.spectral.scan_step;
                const ResolventSweep sw =
                    sweep_resolvent(*sys, config.spectral.lambda_min, top, config.spectral.points, opt);
                CsvWriter csv(rep.out_dir / "sweep.csv", "lambda,resolvent_norm,envelope,peak_lambda");
                for (std::size_t i = 0; i < sw.lambdas.size(); ++i) {
                    const double env = sw.envelope.empty() ? sw.norms[i] : sw.envelope[i];
                    const double peak = sw.peak_lambdas.empty() ? sw.lambdas[i] : sw.peak_lambdas[i];
                    csv.row({sw.lambdas[i], sw.norms[i], env, peak});
                }
                rep.manifest.push_back("sweep.csv");
                rep.headline["lambda_max"] = top;
                if (sw.fitted) {
                    rep.headline["gamma_hat"] = sw.gamma_hat;
                    rep.headline["gamma_fit_residual"] = sw.fit_residual;
                }
            });
        }
    }

    std::optional<Trajectory> traj;
    if (wants(Task::Simulate)) {
        if (!assembled) {
            skip("simulate", no_system);
        } else {
            run("simulate", [&] {
                const SimConfig& s = config.sim;
                if (lowfreq && (!spectrum || spectrum->eigenvectors.size() == 0)) {
                    SpectrumOptions opt;
                    opt.eigenvectors = true;
                    spectrum = compute_spectrum(*sys, opt);
                }
                InitialDataOptions io{s.seed, s.modes, spectrum ? &*spectrum : nullptr};
                const StateVector x0 = make_initial_data(*sys, s.initial, s.k, io);
                traj = simulate(*sys, x0, s.T, s.dt, s.snapshot_stride);
                const std::vector<double> res = dissipation_residual(*sys, *traj);
                CsvWriter csv(rep.out_dir / "trajectory.csv", "t,E,diss,residual");
                const std::size_t n = traj->t.size();
                for (std::size_t i = 0; i < n; ++i) {
                    if (i % static_cast<std::size_t>(s.csv_stride) != 0 && i + 1 != n) continue;
                    csv.row({traj->t[i], traj->energy[i], traj->dissipation[i], res[i]});
                }
                rep.manifest.push_back("trajectory.csv");
                rep.headline["energy_initial"] = traj->energy.front();
                rep.headline["energy_final"] = traj->energy.back();
                rep.headline["max_residual"] = *std::max_element(res.begin(), res.end());
            });
            if (traj) {
                run("fit", [&] {
                    const DecayFit f = fit_decay(*traj, config.sim.window, alpha.value_or(0.0), config.sim.k);
                    rep.headline["decay_slope"] = f.slope;
                    rep.headline["decay_fit_residual"] = f.residual;
                    rep.headline["decay_fit_t_a"] = f.t_a;
                    rep.headline["decay_fit_t_b"] = f.t_b;
                    if (alpha) rep.headline["decay_slope_predicted"] = f.predicted_slope;
                });
            } else {
                skip("fit", "simulation failed");
            }
        }
    }

    if (wants(Task::Hardy)) {
        run("hardy", [&] {
            const HardyConfig& h = config.hardy;
            HardyOptions opt;
            opt.trials = h.trials;
            opt.seed = h.seed;
            opt.threads = config.threads;
            const WeightFunction a = make_weight(h.a, net);
            const WeightFunction rho1 = make_weight(h.rho1, net);
            const WeightFunction rho2 = make_weight(h.rho2, net);
            const HardyLowerBound lb = hardy_constant_lower_bound(a, h.L, opt);
            const double K = lz_constant_K(rho1, rho2, h.L);
            const double mK = muckenhoupt_K(rho1, rho2, h.L);
            json out;
            out["K"] = number_or_null(K);
            out["two_K"] = number_or_null(2.0 * K);
            out["muckenhoupt_K"] = number_or_null(mK);
            out["hardy_lower_bound"] = lb.bound;
            out["hardy_witness"] = lb.witness;
            out["eta_hat"] = lb.eta_hat;
            out["weights"] = {{"a", a.name}, {"rho1", rho1.name}, {"rho2", rho2.name}, {"L", h.L}};
            out["seeds"] = {{"master", h.seed},
                            {"trials", h.trials},
                            {"derivation", "trial i uses splitmix64 of master + (i + 1) * 0x9e3779b97f4a7c15"}};
            rep.headline["hardy_lower_bound"] = lb.bound;
            rep.headline["hardy_eta_hat"] = lb.eta_hat;
            rep.headline["hardy_muckenhoupt_K"] = mK;
            if (std::isfinite(K)) {
                const EmpiricalC c = lz_empirical_best_C(rho1, rho2, h.L, opt);
                out["empirical_C"] = c.value;
                out["empirical_C_witness"] = c.witness;
                out["empirical_C_families"] = {{"rayleigh_ritz", c.ritz},
                                               {"cosine", c.cosine_family},
                                               {"concentrating", c.concentrating},
                                               {"random_pl", c.random_pl}};
                rep.headline["hardy_K"] = K;
                rep.headline["hardy_two_K"] = 2.0 * K;
                rep.headline["hardy_empirical_C"] = c.value;
            } else {
                out["empirical_C"] = nullptr;
            }
            std::ofstream f(rep.out_dir / "hardy.json");
            f << out.dump(2) << '\n';
            rep.manifest.push_back("hardy.json");
        });
    }

    json r;
    r["partial"] = rep.partial;
    r["tasks"] = json::array();
    for (const auto& t : rep.tasks)
        r["tasks"].push_back({{"name", t.name}, {"status", t.status}, {"message", t.message}, {"seconds", t.seconds}});
    r["manifest"] = rep.manifest;
    r["headline"] = json::object();
    for (const auto& [k, v] : rep.headline) r["headline"][k] = number_or_null(v);
    r["validation"] = rep.validation_summary;
    r["mesh"] = {{"n_per_edge", config.mesh.n_per_edge}, {"grading", config.mesh.grading}};
    if (wants(Task::Simulate))
        r["sim"] = {{"initial", initial_name(config.sim.initial)}, {"seed", config.sim.seed}, {"k", config.sim.k}};
    std::ofstream f(rep.out_dir / "report.json");
    f << r.dump(2) << '\n';
    return rep;
}

std::vector<std::string> emit_plot_data(const RunReport& report) {
    auto listed = [&](const std::string& name) {
        return std::find(report.manifest.begin(), report.manifest.end(), name) != report.manifest.end() &&
               std::filesystem::exists(report.out_dir / name);
    };
    std::vector<std::string> written;
    std::vector<std::string> plots;

    if (listed("sweep.csv")) {
        std::ofstream out(report.out_dir / "resolvent_loglog.dat");
        out << "# log10(lambda) log10(resolvent_norm) log10(envelope)\n";
        for (const auto& row : read_csv(report.out_dir / "sweep.csv")) {
            if (row.size() < 3 || !(row[0] > 0.0 && row[1] > 0.0 && row[2] > 0.0)) continue;
            out << format_number(std::log10(row[0])) << ' ' << format_number(std::log10(row[1])) << ' '
                << format_number(std::log10(row[2])) << '\n';
        }
        written.push_back("resolvent_loglog.dat");
        plots.push_back(
            "set output 'resolvent.png'\nset xlabel 'log10 lambda'\nset ylabel 'log10 norm'\n"
            "plot 'resolvent_loglog.dat' u 1:2 w p t 'pointwise', '' u 1:3 w lp t 'envelope'\n");
    } else {
        std::cerr << "emit_plot_data: no sweep.csv, resolvent plot skipped\n";
    }

    if (listed("trajectory.csv")) {
        std::ofstream out(report.out_dir / "energy_loglog.dat");
        out << "# log10(1+t) log10(E)\n";
        for (const auto& row : read_csv(report.out_dir / "trajectory.csv")) {
            if (row.size() < 2 || !(row[1] > 0.0)) continue;
            out << format_number(std::log10(1.0 + row[0])) << ' ' << format_number(std::log10(row[1])) << '\n';
        }
        written.push_back("energy_loglog.dat");
        plots.push_back(
            "set output 'energy.png'\nset xlabel 'log10(1+t)'\nset ylabel 'log10 E'\n"
            "plot 'energy_loglog.dat' u 1:2 w l t 'E(t)'\n");
    } else {
        std::cerr << "emit_plot_data: no trajectory.csv, energy plot skipped\n";
    }

    if (!plots.empty()) {
        std::ofstream gp(report.out_dir / "plots.gp");
        gp << "set terminal pngcairo size 800,600\n";
        for (const auto& p : plots) gp << p;
        written.push_back("plots.gp");
    }
    return written;
}

}  // namespace kvnet
