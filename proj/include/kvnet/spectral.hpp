#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "kvnet/discretization.hpp"

namespace kvnet {

using Complex = std::complex<double>;

/// Generator in coordinates where the energy norm is Euclidean.
///
/// With K = Lk Lk^T and M = Lm Lm^T the state x = (u, v) maps to z = (Lk^T u, Lm^T v),
/// and S becomes [0, B; -B^T, -Dh] with B = Lk^T Lm^-T and Dh = Lm^-1 D Lm^-T.
/// The skew part carries the elastic coupling, -Dh the Kelvin-Voigt dissipation.
struct EnergyBasis {
    Eigen::MatrixXd Lk;
    Eigen::MatrixXd Lm;
    Eigen::MatrixXd S_hat;

    /// x = L^-T z.
    Eigen::MatrixXcd to_state(const Eigen::MatrixXcd& z) const;
};

EnergyBasis energy_basis(const AssembledSystem& system, Eigen::Index budget = kDenseBudget);

struct SpectrumReport {
    std::vector<Complex> eigenvalues;  ///< sorted by imaginary part
    double abscissa = 0.0;             ///< max Re
    double band = 0.0;                 ///< |Im| <= band counts as resolved
    double min_axis_distance = 0.0;    ///< min |Re| over the band (infinity when the band is empty)
    int near_axis_count = 0;           ///< eigenvalues with Re >= -tol
    double tol = 1e-10;
    /// Right eigenvectors in state coordinates, column i for eigenvalues[i]; empty unless requested.
    Eigen::MatrixXcd eigenvectors;
};

struct SpectrumOptions {
    double tol = 1e-10;
    double band = -1.0;  ///< negative: 0.5 / h_max
    bool eigenvectors = false;
    Eigen::Index budget = kDenseBudget;
};

/// Fills derived fields from a raw eigenvalue list.
SpectrumReport make_spectrum_report(std::vector<Complex> eigenvalues, double band, double tol);

/// Dense eigensolve of the energy-basis generator.
SpectrumReport compute_spectrum(const AssembledSystem& system, const SpectrumOptions& options = {});

/// True iff every eigenvalue in the band has Re <= -tol.
bool check_imaginary_axis_clear(const SpectrumReport& report, double tol);

enum class ResolventMethod {
    Auto,     ///< Dense for 2 n_u <= 400, otherwise Lanczos
    Dense,    ///< 1 / sigma_min(i lambda - S_hat)
    Lanczos,  ///< sqrt of the top eigenvalue of R* R via sparse shifted solves
};

/// Energy-norm operator norm of (i lambda - S)^-1.
double resolvent_norm(const AssembledSystem& system, double lambda, ResolventMethod method = ResolventMethod::Auto);

/// Largest frequency a P1 mesh resolves: 0.5 pi / h_max. Infinite for mesh-free systems.
double mesh_cutoff(const AssembledSystem& system);

struct ResolventSweep {
    std::vector<double> lambdas;
    std::vector<double> norms;  ///< pointwise values at the grid
    /// Supremum over the log-window around each grid point (empty when not requested).
    /// Pointwise samples fall between the narrow resonance peaks, the envelope tracks them.
    std::vector<double> envelope;
    std::vector<double> peak_lambdas;  ///< where each envelope value was attained
    double lambda_max_admissible = 0.0;
    double gamma_hat = 0.0;
    double fit_residual = 0.0;
    bool fitted = false;
};

struct SweepOptions {
    bool parallel = false;
    int threads = 0;  ///< 0: hardware concurrency
    ResolventMethod method = ResolventMethod::Auto;
    bool envelope = true;
    double scan_step = 0.5;  ///< absolute lambda step of the peak scan inside each window
};

/// Log-spaced grid on [lambda_min, lambda_max]; ConfigError above the mesh cutoff.
/// Window i spans the geometric midpoints to the neighbouring grid points; its supremum is
/// located by a scan at `scan_step` followed by Brent refinement around the top few scan maxima.
/// The exponent is fitted when the grid qualifies (see fit_gamma).
ResolventSweep sweep_resolvent(const AssembledSystem& system, double lambda_min, double lambda_max, int points,
                               const SweepOptions& options = {});

struct GammaFit {
    double gamma = 0.0;
    double residual = 0.0;
};

/// Least-squares slope of log norm vs log lambda over the upper half of the grid.
/// Needs >= 16 points spanning >= 1.5 decades.
GammaFit fit_gamma(const std::vector<double>& lambdas, const std::vector<double>& norms);
/// Fits the envelope when present, the pointwise norms otherwise.
GammaFit fit_gamma(const ResolventSweep& sweep);

struct PredictedRates {
    double gamma;        ///< (1 - alpha) / (2 - alpha)
    double decay_order;  ///< (2 - alpha) / (1 - alpha)
};

PredictedRates predicted_rates(double alpha);

}  // namespace kvnet
