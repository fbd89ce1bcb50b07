#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "kvnet/discretization.hpp"
#include "kvnet/spectral.hpp"

namespace kvnet {

/// (u, v) stacked; n_u records the system it was built for.
struct StateVector {
    Eigen::VectorXd x;
    Eigen::Index n_u = 0;

    StateVector() = default;
    StateVector(Eigen::VectorXd values, Eigen::Index nu);
    static StateVector zero(const AssembledSystem& system);

    auto u() const { return x.head(n_u); }
    auto v() const { return x.tail(n_u); }
};

/// 1/2 x^T gram x.
double energy(const AssembledSystem& system, const StateVector& state);

/// Cayley (trapezoidal) map x+ = (I - dt/2 S)^-1 (I + dt/2 S) x.
///
/// Eliminating u+ leaves one SPD solve with M + tau D + tau^2 K, tau = dt/2, so M^-1 is never formed.
class CayleyStepper {
public:
    CayleyStepper(const AssembledSystem& system, double dt);

    StateVector step(const StateVector& state) const;
    double dt() const { return dt_; }

private:
    const AssembledSystem* sys_;
    double dt_;
    Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

StateVector step(const AssembledSystem& system, const StateVector& state, double dt);

struct Trajectory {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> energy;
    /// Running sum of dt * (v_k^T D v_k + v_{k+1}^T D v_{k+1}) / 2.
    std::vector<double> dissipation;
    /// Running sum of dt * vbar^T D vbar, vbar = (v_k + v_{k+1}) / 2; balances the Cayley step exactly.
    std::vector<double> dissipation_midpoint;
    int snapshot_stride = 0;
    std::vector<Eigen::VectorXd> snapshots;  ///< states at k = 0, stride, 2 stride, ...
};

/// snapshot_stride <= 0 stores no states.
Trajectory simulate(const AssembledSystem& system, const StateVector& initial, double T, double dt,
                    int snapshot_stride = 0);

enum class DissipationSampling { Trapezoid, Midpoint };

/// |E(t_k) - E(0) + dissipation_k|.
std::vector<double> dissipation_residual(const AssembledSystem& system, const Trajectory& trajectory,
                                         DissipationSampling sampling = DissipationSampling::Trapezoid);

enum class InitialKind { EigenLowFreq, PolynomialBump, RandomSmooth };

struct InitialDataOptions {
    std::uint64_t seed = 12345;
    int modes = 12;                           ///< eigen_lowfreq: conjugate pairs kept
    const SpectrumReport* spectrum = nullptr;  ///< eigen_lowfreq: needs eigenvectors
};

/// sum_{j<=k} ||S^j x||_gram^2, square-rooted.
double graph_norm(const AssembledSystem& system, const StateVector& state, int k);

/// Discrete D(A^k) data with graph norm 1.
StateVector make_initial_data(const AssembledSystem& system, InitialKind kind, int k,
                              const InitialDataOptions& options = {});

struct DecayFit {
    double t_a = 0.0;
    double t_b = 0.0;
    double slope = 0.0;
    double predicted_slope = 0.0;
    double residual = 0.0;
    int samples = 0;
    bool window_shrunk = false;  ///< energy underflowed before t_b
};

/// -2 k (2 - alpha) / (1 - alpha).
double predicted_decay_slope(double alpha, int k);

/// Slope of log E against log(1 + t) on [f0 T, f1 T].
DecayFit fit_decay(const Trajectory& trajectory, std::pair<double, double> window_fraction, double alpha, int k);

}  // namespace kvnet
