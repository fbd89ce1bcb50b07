#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kvnet/discretization.hpp"
#include "kvnet/network.hpp"
#include "kvnet/semigroup.hpp"

namespace kvnet {

struct MeshConfig {
    int n_per_edge = 200;
    double grading = 2.0;
};

struct SimConfig {
    double dt = 0.01;
    double T = 200.0;
    InitialKind initial = InitialKind::RandomSmooth;
    int k = 1;
    int snapshot_stride = 0;
    int csv_stride = 1;
    std::pair<double, double> window{0.5, 1.0};
    std::uint64_t seed = 12345;
    int modes = 12;
};

struct SpectralConfig {
    double lambda_min = 10.0;
    std::optional<double> lambda_max;  ///< empty: "auto", the mesh cutoff
    int points = 48;
    bool spectrum = true;
    bool sweep = true;
    bool envelope = true;
    double scan_step = 0.5;
};

/// {"kind": "power", "p": ..., "c": ...} | {"kind": "constant", "c": ...} | {"kind": "profile", "edge": j}
struct WeightSpec {
    std::string kind = "constant";
    double p = 0.0;
    double c = 1.0;
    int edge = 1;
};

struct HardyConfig {
    WeightSpec a{"profile", 0.0, 1.0, 1};
    WeightSpec rho1;
    WeightSpec rho2;
    double L = 1.0;
    int trials = 1000;
    std::uint64_t seed = 2024;
};

/// Blocks always carry their defaults; the has_* flags record which ones the file named,
/// and only named blocks run by default.
struct ExperimentConfig {
    StarNetwork network = StarNetwork::default_network(0.5);
    MeshConfig mesh;
    SimConfig sim;
    SpectralConfig spectral;
    HardyConfig hardy;
    bool has_sim = false;
    bool has_spectral = false;
    bool has_hardy = false;
    std::string out = "out";
    int threads = 1;  ///< not part of the file; set from the command line
};

/// Strict parse: unknown fields, wrong types and semantic violations raise ConfigError with the
/// offending field path; JSON syntax errors carry the byte position.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

enum class Task { Validate, Spectrum, Sweep, Simulate, Hardy };
std::string task_name(Task t);

struct TaskStatus {
    std::string name;
    std::string status;  ///< "ok", "failed", "skipped"
    std::string message;
    double seconds = 0.0;
};

struct RunReport {
    bool partial = false;
    std::vector<TaskStatus> tasks;
    std::vector<std::string> manifest;  ///< artifact files written, relative to out_dir
    std::filesystem::path out_dir;
    /// Headline numbers; absent entries were not computed.
    std::map<std::string, double> headline;
    std::vector<std::string> validation_summary;
};

/// Runs the requested tasks in the order validate, spectrum, sweep, simulate (with fits), hardy.
/// An empty task list means every task whose config block is present. Writes report.json.
RunReport run_experiment(const ExperimentConfig& config, std::vector<Task> tasks = {});

/// Smallest damping exponent over the damped edges (0 for piecewise-constant support reaching the
/// vertex); empty when no edge yields one.
std::optional<double> network_alpha(const StarNetwork& network);

/// Gnuplot-ready text files next to the report's artifacts. Returns the files written.
std::vector<std::string> emit_plot_data(const RunReport& report);

/// Plain-text coordinate dump, one "row col value" line per stored entry.
void write_coordinate_matrix(const std::filesystem::path& path, const SparseMatrix& matrix);

/// 17 significant digits, scientific.
std::string format_number(double v);

}  // namespace kvnet
