#include "kvnet/profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kvnet/error.hpp"

namespace kvnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double table_value(const Tabulated& t, double x) {
    const auto& p = t.points;
    if (x < p.front().first || x > p.back().first) {
        std::ostringstream os;
        os << "tabulated profile evaluated at x=" << x << " outside its range [" << p.front().first
           << ", " << p.back().first << "]";
        throw DomainError(os.str());
    }
    auto it = std::upper_bound(p.begin(), p.end(), x,
                               [](double v, const std::pair<double, double>& q) { return v < q.first; });
    if (it == p.end()) return p.back().second;
    if (it == p.begin()) return p.front().second;
    const auto& [x1, d1] = *it;
    const auto& [x0, d0] = *(it - 1);
    const double w = (x - x0) / (x1 - x0);
    return (1.0 - w) * d0 + w * d1;
}

double log_power_value(const LogPower& p, double x) {
    if (x == 0.0 || x == 1.0) return 0.0;
    return p.kappa * std::pow(x, p.alpha_prime) * std::pow(std::abs(std::log(x)), p.beta);
}

}  // namespace

DampingProfile::DampingProfile(Variant v) : v_(std::move(v)) {
    std::visit(overloaded{
                   [](const ZeroDamping&) {},
                   [](const PowerLaw& p) {
                       if (!(p.alpha > 0.0 && p.alpha < 1.0))
                           throw ConfigError("alpha must lie in (0,1)");
                       if (!(p.kappa > 0.0)) throw ConfigError("kappa must be positive");
                   },
                   [](const LogPower& p) {
                       if (!(p.alpha_prime > 0.0 && p.alpha_prime < 1.0))
                           throw ConfigError("alpha_prime must lie in (0,1)");
                       if (!(p.beta > 0.0)) throw ConfigError("beta must be positive");
                       if (!(p.kappa > 0.0)) throw ConfigError("kappa must be positive");
                   },
                   [](const PiecewiseConstant& p) {
                       if (!(p.a >= 0.0)) throw ConfigError("a must be nonnegative");
                       if (!(p.b > p.a)) throw ConfigError("b must exceed a");
                       if (!(p.level > 0.0)) throw ConfigError("level must be positive");
                   },
                   [](const Tabulated& t) {
                       if (t.points.size() < 2) throw ConfigError("table needs at least two points");
                       for (std::size_t i = 0; i < t.points.size(); ++i) {
                           if (!(t.points[i].second >= 0.0))
                               throw ConfigError("table values must be nonnegative");
                           if (i > 0 && !(t.points[i].first > t.points[i - 1].first))
                               throw ConfigError("table abscissae must be strictly increasing");
                       }
                   },
               },
               v_);
}

bool DampingProfile::is_zero() const {
    if (std::holds_alternative<ZeroDamping>(v_)) return true;
    if (const auto* t = std::get_if<Tabulated>(&v_))
        return std::all_of(t->points.begin(), t->points.end(), [](const auto& p) { return p.second == 0.0; });
    return false;
}

std::string DampingProfile::kind_name() const {
    return std::visit(overloaded{
                          [](const ZeroDamping&) { return std::string("zero"); },
                          [](const PowerLaw&) { return std::string("power"); },
                          [](const LogPower&) { return std::string("logpower"); },
                          [](const PiecewiseConstant&) { return std::string("piecewise"); },
                          [](const Tabulated&) { return std::string("table"); },
                      },
                      v_);
}

double DampingProfile::value(double x) const {
    if (!(x >= 0.0)) {
        std::ostringstream os;
        os << "damping evaluated at x=" << x << " < 0";
        throw DomainError(os.str());
    }
    return std::visit(overloaded{
                          [](const ZeroDamping&) { return 0.0; },
                          [x](const PowerLaw& p) { return p.kappa * std::pow(x, p.alpha); },
                          [x](const LogPower& p) { return log_power_value(p, x); },
                          [x](const PiecewiseConstant& p) { return (x >= p.a && x <= p.b) ? p.level : 0.0; },
                          [x](const Tabulated& t) { return table_value(t, x); },
                      },
                      v_);
}

double DampingProfile::derivative(double x) const {
    return std::visit(
        overloaded{
            [](const ZeroDamping&) { return 0.0; },
            [x](const PowerLaw& p) { return p.kappa * p.alpha * std::pow(x, p.alpha - 1.0); },
            [x](const LogPower& p) {
                if (x == 1.0) {
                    if (p.beta > 1.0) return 0.0;
                    throw NonDifferentiableError("logpower profile is not differentiable at x=1");
                }
                const double lx = std::log(x);
                const double sgn = lx < 0.0 ? -1.0 : 1.0;
                const double al = std::abs(lx);
                // d/dx [x^a |ln x|^b] = x^(a-1) |ln x|^(b-1) (a |ln x| + b sgn(ln x))
                return p.kappa * std::pow(x, p.alpha_prime - 1.0) * std::pow(al, p.beta - 1.0) *
                       (p.alpha_prime * al + p.beta * sgn);
            },
            [x](const PiecewiseConstant& p) {
                if (x == p.a || x == p.b) {
                    std::ostringstream os;
                    os << "piecewise-constant profile is not differentiable at x=" << x;
                    throw NonDifferentiableError(os.str());
                }
                return 0.0;
            },
            [x](const Tabulated& t) {
                const double lo = t.points.front().first;
                const double hi = t.points.back().first;
                const double h = 1e-6 * (hi - lo);
                const double xm = std::max(lo, x - h);
                const double xp = std::min(hi, x + h);
                return (table_value(t, xp) - table_value(t, xm)) / (xp - xm);
            },
        },
        v_);
}

double DampingProfile::sup_bound(double length) const {
    return std::visit(overloaded{
                          [](const ZeroDamping&) { return 0.0; },
                          [length](const PowerLaw& p) { return p.kappa * std::pow(length, p.alpha); },
                          [length](const LogPower& p) {
                              // x^a |ln x|^b peaks on (0,1) at x = exp(-b/a), then grows again past 1.
                              const double peak = std::exp(-p.beta / p.alpha_prime);
                              const double left = std::min(1.0, length);
                              double s = log_power_value(p, peak <= left ? peak : left);
                              if (length > 1.0) s = std::max(s, log_power_value(p, length));
                              return s;
                          },
                          [](const PiecewiseConstant& p) { return p.level; },
                          [](const Tabulated& t) {
                              double m = 0.0;
                              for (const auto& q : t.points) m = std::max(m, q.second);
                              return m;
                          },
                      },
                      v_);
}

std::vector<double> DampingProfile::kinks() const {
    if (const auto* p = std::get_if<PiecewiseConstant>(&v_)) return {p->a, p->b};
    if (const auto* p = std::get_if<LogPower>(&v_)) {
        if (p->beta <= 1.0) return {1.0};
    }
    return {};
}

double eval_d(const DampingProfile& profile, double x, double length) {
    if (!(x >= 0.0 && x <= length)) {
        std::ostringstream os;
        os << "x=" << x << " outside [0, " << length << "]";
        throw DomainError(os.str());
    }
    return profile.value(x);
}

double eval_d_prime(const DampingProfile& profile, double x, double length) {
    if (!(x > 0.0 && x < length)) {
        std::ostringstream os;
        os << "derivative requested at x=" << x << ", outside the open interval (0, " << length << ")";
        throw DomainError(os.str());
    }
    return profile.derivative(x);
}

}  // namespace kvnet
