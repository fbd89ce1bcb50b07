#pragma once

#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace kvnet {

// Damping coefficient families d(x) on one edge, with x = 0 at the shared vertex.

struct ZeroDamping {};

/// d(x) = kappa * x^alpha.
struct PowerLaw {
    double alpha;
    double kappa = 1.0;
};

/// d(x) = kappa * x^alpha_prime * |ln x|^beta. Vanishes at x = 0 and x = 1.
struct LogPower {
    double alpha_prime;
    double beta;
    double kappa = 1.0;
};

/// d(x) = level on [a, b], 0 elsewhere.
struct PiecewiseConstant {
    double a;
    double b;
    double level;
};

/// Piecewise-linear interpolation of sorted samples (x_i, d_i).
struct Tabulated {
    std::vector<std::pair<double, double>> points;
};

class DampingProfile {
public:
    using Variant = std::variant<ZeroDamping, PowerLaw, LogPower, PiecewiseConstant, Tabulated>;

    /// Validates parameters; throws ConfigError on out-of-range values.
    DampingProfile(Variant v);  // NOLINT(google-explicit-constructor)
    DampingProfile() : DampingProfile(ZeroDamping{}) {}

    static DampingProfile zero() { return DampingProfile(ZeroDamping{}); }
    static DampingProfile power(double alpha, double kappa = 1.0) { return DampingProfile(PowerLaw{alpha, kappa}); }
    static DampingProfile log_power(double alpha_prime, double beta, double kappa = 1.0) {
        return DampingProfile(LogPower{alpha_prime, beta, kappa});
    }
    static DampingProfile piecewise(double a, double b, double level) {
        return DampingProfile(PiecewiseConstant{a, b, level});
    }
    static DampingProfile table(std::vector<std::pair<double, double>> pts) {
        return DampingProfile(Tabulated{std::move(pts)});
    }

    const Variant& params() const { return v_; }
    bool is_zero() const;
    std::string kind_name() const;

    /// d(x) for x >= 0; no upper-range check (see eval_d).
    double value(double x) const;
    /// d'(x), analytic where a closed form exists.
    double derivative(double x) const;
    /// An upper bound of d on [0, length].
    double sup_bound(double length) const;
    /// Interior points where d' does not exist.
    std::vector<double> kinks() const;

private:
    Variant v_;
};

/// d(x) on [0, length]; DomainError outside.
double eval_d(const DampingProfile& profile, double x,
              double length = std::numeric_limits<double>::infinity());

/// d'(x) on the open interval (0, length); NonDifferentiableError at kinks.
double eval_d_prime(const DampingProfile& profile, double x,
                    double length = std::numeric_limits<double>::infinity());

}  // namespace kvnet
