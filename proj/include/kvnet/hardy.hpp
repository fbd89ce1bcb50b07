#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kvnet/profile.hpp"

namespace kvnet {

/// Nonnegative weight on (0, L].
struct WeightFunction {
    std::function<double(double)> value;
    std::optional<std::function<double(double)>> derivative;
    std::string name;

    double operator()(double x) const { return value(x); }

    static WeightFunction power(double p, double c = 1.0);
    static WeightFunction constant(double c = 1.0);
    static WeightFunction from_profile(const DampingProfile& profile);
};

/// Gauss-Legendre on panels graded geometrically toward both ends of [lo, hi], refined at `breaks`.
/// Tolerates integrable endpoint singularities down to x^-0.99 or so.
struct GradedQuadrature {
    int levels = 640;        ///< halvings toward each endpoint
    int panels_per_octave = 1;
    int uniform_panels = 4;  ///< panels across the middle

    double integrate(const std::function<double(double)>& f, double lo, double hi,
                     const std::vector<double>& breaks = {}) const;
};

/// z with z(0) = 0, its derivative, and the points where it is not smooth.
struct TestFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    std::vector<double> breaks;
    std::string name;

    static TestFunction monomial(double p);
    /// Cubic Hermite spline (pchip) through (0, 0) and (knots[i], values[i]).
    static TestFunction spline(std::vector<double> knots, std::vector<double> values);
};

/// [int a / x^2 |z|^2] / [int a |z'|^2] over (0, L).
double hardy_ratio(const WeightFunction& a, const TestFunction& z, double L, const GradedQuadrature& q = {});

struct HardyOptions {
    int trials = 1000;
    std::uint64_t seed = 2024;
    int threads = 1;
    /// Monomials x^p, p = p_min, p_min + p_step, ..., p_max.
    double p_min = 0.6;
    double p_max = 3.0;
    double p_step = 0.1;
};

struct HardyLowerBound {
    double bound = 0.0;
    double eta_hat = 0.0;
    std::string witness;
    int evaluated = 0;   ///< test functions that gave a finite ratio
    int degenerate = 0;
};

/// Max of hardy_ratio over monomials and `trials` random splines. Checks the eta-limit first.
HardyLowerBound hardy_constant_lower_bound(const WeightFunction& a, double L, const HardyOptions& options = {});

/// sup_x (int_0^{L-x} rho1)(int_{L-x}^L 1/rho2); +infinity when an integral diverges.
double lz_constant_K(const WeightFunction& rho1, const WeightFunction& rho2, double L);

/// sup_r (int_r^L rho1)(int_0^r 1/rho2), the two-sided Muckenhoupt constant of Tf = int_0^x f.
/// Equals lz_constant_K with both weights reflected about L/2; the two agree for symmetric data.
double muckenhoupt_K(const WeightFunction& rho1, const WeightFunction& rho2, double L);

struct EmpiricalC {
    double value = 0.0;
    std::string witness;
    double ritz = 0.0;            ///< Rayleigh-Ritz value on the graded P1 space
    double cosine_family = 0.0;   ///< best over f = cos(theta x)
    double concentrating = 0.0;   ///< best over f = rho2^-1 on [0, r]
    double random_pl = 0.0;       ///< best over random piecewise-linear f
};

/// Lower bound on the best C in int rho1 |Tf|^2 <= C int rho2 |f|^2, Tf(x) = int_0^x f.
EmpiricalC lz_empirical_best_C(const WeightFunction& rho1, const WeightFunction& rho2, double L,
                               const HardyOptions& options = {});

/// Independent stream for trial i of a run seeded with `master`.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t i);

}  // namespace kvnet
