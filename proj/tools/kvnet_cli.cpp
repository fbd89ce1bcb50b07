#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kvnet/error.hpp"
#include "kvnet/experiment.hpp"

using namespace kvnet;

int main(int argc, char** argv) {
    CLI::App app{"Kelvin-Voigt star network experiments"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool dump_matrices = false;
    app.add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory (overrides the config)");
    app.add_option("--seed", seed, "seed for initial data and Hardy trials (overrides the config)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--dump-matrices", dump_matrices, "write K, M, D in coordinate format (validate only)");

    struct Sub {
        const char* name;
        const char* help;
        std::vector<Task> tasks;
    };
    const std::vector<Sub> subs = {
        {"validate", "check the damping assumptions", {Task::Validate}},
        {"spectrum", "eigenvalues of the discrete generator", {Task::Spectrum}},
        {"sweep", "resolvent norm along the imaginary axis", {Task::Sweep}},
        {"simulate", "time integration and decay fit", {Task::Simulate}},
        {"hardy", "Hardy and integral-operator constants", {Task::Hardy}},
        {"all", "every task the config defines", {}},
    };
    for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(config_path);
        if (out) cfg.out = *out;
        if (seed) {
            cfg.sim.seed = *seed;
            cfg.hardy.seed = *seed;
        }
        cfg.threads = threads;
        std::vector<Task> tasks;
        std::string chosen;
        for (const auto& s : subs)
            if (app.got_subcommand(s.name)) {
                tasks = s.tasks;
                chosen = s.name;
            }

        const RunReport rep = run_experiment(cfg, tasks);
        if (dump_matrices && chosen == "validate") {
            const AssembledSystem sys = discretize(cfg.network, cfg.mesh.n_per_edge, cfg.mesh.grading);
            write_coordinate_matrix(rep.out_dir / "K.txt", sys.K);
            write_coordinate_matrix(rep.out_dir / "M.txt", sys.M);
            write_coordinate_matrix(rep.out_dir / "D.txt", sys.D);
            std::cout << "matrices written to " << rep.out_dir.string() << "\n";
        }
        for (const auto& f : emit_plot_data(rep)) std::cout << "plot data: " << f << "\n";

        for (const auto& t : rep.tasks) {
            std::cout << t.name << ": " << t.status << " (" << t.seconds << " s)";
            if (!t.message.empty()) std::cout << " " << t.message;
            std::cout << "\n";
        }
        for (const auto& v : rep.validation_summary) std::cout << "  " << v << "\n";
        for (const auto& [k, v] : rep.headline) std::cout << k << " = " << format_number(v) << "\n";
        std::cout << "report: " << (rep.out_dir / "report.json").string() << (rep.partial ? " (partial)" : "") << "\n";
        return rep.partial ? 1 : 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
