#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kvnet/profile.hpp"

namespace kvnet {

struct DampedEdge {
    double length;
    DampingProfile profile;
};

/// Edge 0 is elastic; edges 1..N carry Kelvin-Voigt damping. All edges meet at x = 0.
class StarNetwork {
public:
    StarNetwork(double length_0, std::vector<DampedEdge> damped_edges);

    /// l0 = 1, N = 2, l1 = l2 = 1, d_j = kappa x^alpha on both damped edges.
    static StarNetwork default_network(double alpha, double kappa = 1.0);
    /// Same geometry as default_network, all profiles zero.
    static StarNetwork undamped_default();

    int damped_count() const { return static_cast<int>(edges_.size()); }
    int edge_count() const { return damped_count() + 1; }
    double length(int edge) const;
    /// Profile of edge `edge`; edge 0 reports the zero profile.
    const DampingProfile& profile(int edge) const;
    const std::vector<DampedEdge>& damped_edges() const { return edges_; }
    double length_0() const { return length_0_; }
    bool undamped() const;

    /// Same geometry, every damping amplitude multiplied by `factor`.
    StarNetwork scaled_damping(double factor) const;

private:
    double length_0_;
    std::vector<DampedEdge> edges_;
    DampingProfile zero_;
};

using RealFunction = std::function<double(double)>;

enum class KappaMode {
    Finite,        ///< d(x)/x^alpha converged to a finite value
    ZeroLimit,     ///< ratio tends to 0
    LogDivergent,  ///< ratio grows slower than any power: holds for any alpha < alpha_hat with kappa = 0
};

struct AlphaKappaEstimate {
    double alpha = 0.0;
    double kappa = 0.0;
    KappaMode mode = KappaMode::Finite;
    std::vector<double> slopes;  ///< raw two-point log-log slopes, coarse to fine
};

/// Limit of the log-log slope of d near 0 and of d(x)/x^alpha.
AlphaKappaEstimate estimate_alpha_kappa(const RealFunction& d, double length);
AlphaKappaEstimate estimate_alpha_kappa(const DampingProfile& profile, double length = 1.0);

/// Limit of x d'(x) / d(x) as x -> 0+.
double estimate_eta(const RealFunction& d, const RealFunction& d_prime, double length);
double estimate_eta(const DampingProfile& profile, double length = 1.0);

/// Geometric sample grid used by the limit estimators: x_k = min(length,1)/4 * 2^-k, 12 levels.
std::vector<double> limit_grid(double length);

struct ValidationTolerances {
    double support_threshold = 1e-12;  ///< d >= threshold counts as support for the witness interval
    double param_tol = 1e-6;           ///< agreement with declared power-law parameters
    double log_param_tol = 1e-3;       ///< agreement with declared log-power parameters
    int scan_points = 4096;
};

struct ValidationReport {
    int edge = 0;  ///< 1-based damped edge index
    bool a1_ok = false;
    double witness_a = 0.0;
    double witness_b = 0.0;
    double sup_bound = 0.0;

    bool a2_applicable = false;
    bool a2_ok = false;
    double alpha_hat = 0.0;
    double kappa_hat = 0.0;
    KappaMode kappa_mode = KappaMode::Finite;

    bool a3_applicable = false;
    bool a3_ok = false;
    double eta_hat = 0.0;

    ValidationTolerances tolerances;
    std::string note;
};

std::vector<ValidationReport> validate_assumptions(const StarNetwork& network,
                                                   const ValidationTolerances& tol = {});

}  // namespace kvnet
