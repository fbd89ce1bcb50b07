#include "kvnet/hardy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

// Boost 1.74 pchip calls unqualified isnan.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include "kvnet/error.hpp"
#include "kvnet/network.hpp"

namespace kvnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Gauss = boost::math::quadrature::gauss<double, 20>;

double numeric_derivative(const std::function<double(double)>& f, double x) {
    const double h = 1e-6 * std::max(std::abs(x), 1e-300);
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Runs body(i) for i in [0, count) on up to `threads` workers.
template <class Body>
void parallel_for(int count, int threads, Body body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) body(i);
        });
}

}  // namespace

WeightFunction WeightFunction::power(double p, double c) {
    std::ostringstream os;
    os << c << "*x^" << p;
    return {[p, c](double x) { return c * std::pow(x, p); },
            [p, c](double x) { return c * p * std::pow(x, p - 1.0); }, os.str()};
}

WeightFunction WeightFunction::constant(double c) {
    std::ostringstream os;
    os << c;
    return {[c](double) { return c; }, [](double) { return 0.0; }, os.str()};
}

WeightFunction WeightFunction::from_profile(const DampingProfile& profile) {
    return {[profile](double x) { return profile.value(x); }, [profile](double x) { return profile.derivative(x); },
            profile.kind_name()};
}

double GradedQuadrature::integrate(const std::function<double(double)>& f, double lo, double hi,
                                   const std::vector<double>& breaks) const {
    if (!(hi > lo)) return 0.0;
    const double w = hi - lo;
    const int U = std::max(1, uniform_panels) * std::max(1, panels_per_octave);
    std::vector<double> pts;
    pts.reserve(2 * levels * panels_per_octave + U + breaks.size() + 2);
    for (int k = 0; k <= U; ++k) pts.push_back(lo + w * k / U);
    const double edge = w / std::max(1, uniform_panels);
    for (int j = 1; j <= levels * panels_per_octave; ++j) {
        const double s = edge * std::exp2(-static_cast<double>(j) / panels_per_octave);
        if (s < 1e-290) break;  // keep Gauss nodes clear of underflow
        pts.push_back(lo + s);
        pts.push_back(hi - s);
    }
    for (double b : breaks)
        if (b > lo && b < hi) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) sum += Gauss::integrate(f, pts[i], pts[i + 1]);
    return sum;
}

TestFunction TestFunction::monomial(double p) {
    std::ostringstream os;
    os << "x^" << p;
    return {[p](double x) { return std::pow(x, p); }, [p](double x) { return p * std::pow(x, p - 1.0); }, {},
            os.str()};
}

TestFunction TestFunction::spline(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() != values.size() || knots.size() < 3)
        throw ConfigError("spline needs at least three knots with matching values");
    std::vector<double> xs{0.0}, ys{0.0};
    xs.insert(xs.end(), knots.begin(), knots.end());
    ys.insert(ys.end(), values.begin(), values.end());
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ConfigError("spline knots must be positive and increasing");
    const std::vector<double> breaks = knots;
    const double right = xs.back();
    auto s = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(xs), std::move(ys));
    return {[s, right](double x) { return (*s)(std::min(x, right)); },
            [s, right](double x) { return x > right ? 0.0 : s->prime(x); }, breaks, "spline"};
}

double hardy_ratio(const WeightFunction& a, const TestFunction& z, double L, const GradedQuadrature& q) {
    if (!(L > 0.0)) throw ConfigError("L must be positive");
    if (std::abs(z.value(0.0)) > 1e-14) throw ConfigError("test function must vanish at 0");
    const double num = q.integrate(
        [&](double x) {
            const double v = z.value(x) / x;
            return a(x) * v * v;
        },
        0.0, L, z.breaks);
    const double den = q.integrate(
        [&](double x) {
            const double d = z.derivative(x);
            return a(x) * d * d;
        },
        0.0, L, z.breaks);
    if (!std::isfinite(den)) throw NumericalError("int a |z'|^2 is not finite");
    if (den < 1e-14) {
        std::ostringstream os;
        os << "degenerate test function " << z.name << ": int a |z'|^2 = " << den;
        throw DegenerateTestFunction(os.str());
    }
    return num / den;
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t i) {
    // splitmix64 step on master + (i+1) * golden gamma
    std::uint64_t z = master + (i + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

HardyLowerBound hardy_constant_lower_bound(const WeightFunction& a, double L, const HardyOptions& options) {
    if (!(L > 0.0)) throw ConfigError("L must be positive");
    if (options.trials < 0) throw ConfigError("trials must be nonnegative");
    HardyLowerBound out;
    const auto dprime = a.derivative ? *a.derivative
                                     : std::function<double(double)>([&a](double x) { return numeric_derivative(a.value, x); });
    out.eta_hat = estimate_eta(a.value, dprime, L);
    if (!(out.eta_hat >= -1e-9 && out.eta_hat < 1.0)) {
        std::ostringstream os;
        os << "weight " << a.name << " has eta = " << out.eta_hat << ", outside [0,1)";
        throw ConfigError(os.str());
    }

    std::vector<TestFunction> family;
    const int nmono = static_cast<int>(std::llround((options.p_max - options.p_min) / options.p_step)) + 1;
    for (int i = 0; i < nmono; ++i) family.push_back(TestFunction::monomial(options.p_min + i * options.p_step));
    for (int t = 0; t < options.trials; ++t) {
        std::mt19937_64 rng(trial_seed(options.seed, static_cast<std::uint64_t>(t)));
        const int m = std::uniform_int_distribution<int>(3, 10)(rng);
        const double g = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
        std::normal_distribution<double> nd;
        std::vector<double> xs(m), ys(m);
        for (int k = 0; k < m; ++k) {
            xs[k] = L * std::pow(static_cast<double>(k + 1) / m, g);
            ys[k] = nd(rng);
        }
        TestFunction z = TestFunction::spline(std::move(xs), std::move(ys));
        z.name = "spline#" + std::to_string(t);
        family.push_back(std::move(z));
    }

    std::vector<double> ratios(family.size(), -kInf);
    parallel_for(static_cast<int>(family.size()), options.threads, [&](int i) {
        try {
            ratios[i] = hardy_ratio(a, family[i], L);
        } catch (const DegenerateTestFunction&) {
        }
    });
    out.bound = -kInf;
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (ratios[i] == -kInf) {
            ++out.degenerate;
            continue;
        }
        ++out.evaluated;
        if (ratios[i] > out.bound) {
            out.bound = ratios[i];
            out.witness = family[i].name;
        }
    }
    if (out.evaluated == 0) throw DegenerateTestFunction("every test function was degenerate");
    return out;
}

namespace {

// sup over s in (0, L) of (int_0^s left)(int_s^L right): cumulative quadrature on a uniform grid,
// then a Brent polish around the best grid point.
class ProductSup {
public:
    ProductSup(std::function<double(double)> left, std::function<double(double)> right, double L, int grid)
        : left_(std::move(left)), right_(std::move(right)), L_(L), n_(grid), A_(grid + 1), B_(grid + 1) {
        const GradedQuadrature q;
        A_[0] = 0.0;
        for (int i = 1; i <= n_; ++i) A_[i] = A_[i - 1] + q.integrate(left_, r(i - 1), r(i));
        B_[n_] = 0.0;
        for (int i = n_ - 1; i >= 0; --i) B_[i] = B_[i + 1] + q.integrate(right_, r(i), r(i + 1));
    }

    double r(int i) const { return L_ * i / n_; }

    double at(double s) const {
        const int i = std::clamp(static_cast<int>(std::floor(s / L_ * n_)), 0, n_ - 1);
        const GradedQuadrature q{120, 1, 1};
        const double a = A_[i] + q.integrate(left_, r(i), s);
        const double b = B_[i] - q.integrate(right_, r(i), s);
        return a * b;
    }

    /// inf when an interior cumulative integral diverges; the end values A_[n], B_[0] never enter.
    double sup() const {
        for (int i = 1; i < n_; ++i)
            if (!std::isfinite(A_[i]) || !std::isfinite(B_[i])) return kInf;
        int best = 1;
        for (int i = 1; i < n_; ++i)
            if (A_[i] * B_[i] > A_[best] * B_[best]) best = i;
        const double lo = best > 1 ? r(best - 1) : 1e-12 * L_;
        const double hi = best + 1 < n_ ? r(best + 1) : L_ * (1.0 - 1e-12);
        const auto [x, v] = boost::math::tools::brent_find_minima([this](double s) { return -at(s); }, lo, hi, 52);
        (void)x;
        return std::max(-v, A_[best] * B_[best]);
    }

private:
    std::function<double(double)> left_, right_;
    double L_;
    int n_;
    std::vector<double> A_, B_;
};

// s g(L - s) must decay as s -> 0 for g to be integrable at L.
bool integrable_at_right_end(const std::function<double(double)>& g, double L) {
    double prev = 0.0;
    for (int k = 20; k <= 45; k += 25) {
        const double s = L * std::exp2(-k);
        const double v = s * g(L - s);
        if (!std::isfinite(v)) return false;
        if (k > 20 && v > 0.5 * prev) return false;
        prev = v;
    }
    return true;
}

bool integrable_at_zero(const std::function<double(double)>& f, double L) {
    const GradedQuadrature shallow{480, 1, 1};
    const GradedQuadrature deep{960, 1, 1};
    const double a = shallow.integrate(f, 0.0, 0.5 * L);
    const double b = deep.integrate(f, 0.0, 0.5 * L);
    return std::isfinite(a) && std::isfinite(b) && std::abs(b - a) <= 1e-6 * std::max(std::abs(b), 1e-300);
}

}  // namespace

double lz_constant_K(const WeightFunction& rho1, const WeightFunction& rho2, double L) {
    if (!(L > 0.0)) throw ConfigError("L must be positive");
    const std::function<double(double)> inv2 = [&rho2](double x) { return 1.0 / rho2(x); };
    if (!integrable_at_zero(rho1.value, L) || !integrable_at_right_end(inv2, L)) return kInf;
    // x = L - s
    return ProductSup(rho1.value, inv2, L, 1024).sup();
}

double muckenhoupt_K(const WeightFunction& rho1, const WeightFunction& rho2, double L) {
    if (!(L > 0.0)) throw ConfigError("L must be positive");
    const std::function<double(double)> inv2 = [&rho2](double x) { return 1.0 / rho2(x); };
    if (!integrable_at_zero(inv2, L) || !integrable_at_right_end(rho1.value, L)) return kInf;
    return ProductSup(inv2, rho1.value, L, 1024).sup();
}

namespace {

// Ratio int rho1 |F|^2 / int rho2 |f|^2 with F = T f supplied alongside f.
double lz_ratio(const WeightFunction& rho1, const WeightFunction& rho2, const std::function<double(double)>& f,
                const std::function<double(double)>& F, double L, const std::vector<double>& breaks) {
    const GradedQuadrature q;
    const double num = q.integrate([&](double x) { const double v = F(x); return rho1(x) * v * v; }, 0.0, L, breaks);
    const double den = q.integrate([&](double x) { const double v = f(x); return rho2(x) * v * v; }, 0.0, L, breaks);
    if (!(den > 1e-14) || !std::isfinite(den)) throw DegenerateTestFunction("int rho2 |f|^2 is degenerate");
    return num / den;
}

double cosine_family(const WeightFunction& rho1, const WeightFunction& rho2, double L) {
    auto ratio = [&](double theta) {
        return lz_ratio(
            rho1, rho2, [theta](double x) { return std::cos(theta * x); },
            [theta](double x) { return std::sin(theta * x) / theta; }, L, {});
    };
    constexpr int kScan = 64;
    const double top = 2.0 * M_PI / L;
    int best = 1;
    std::vector<double> vals(kScan + 1, -kInf);
    for (int i = 1; i <= kScan; ++i) {
        vals[i] = ratio(top * i / kScan);
        if (vals[i] > vals[best]) best = i;
    }
    const double lo = top * (best - 1) / kScan + 1e-9 * top;
    const double hi = top * std::min(best + 1, kScan) / kScan;
    const auto [t, v] = boost::math::tools::brent_find_minima([&](double th) { return -ratio(th); }, lo, hi, 40);
    (void)t;
    return std::max(-v, vals[best]);
}

// f = 1/rho2 on [0, r] has ratio >= B0(r) int_r^L rho1, B0(r) = int_0^r 1/rho2 (the part of
// int rho1 |Tf|^2 on [0, r] is dropped, so the value stays a lower bound).
double concentrating_family(const WeightFunction& rho1, const WeightFunction& rho2, double L) {
    const std::function<double(double)> inv2 = [&rho2](double x) { return 1.0 / rho2(x); };
    if (!integrable_at_zero(inv2, L)) return -kInf;
    const GradedQuadrature q;
    double best = -kInf;
    for (int j = 1; j <= 160; ++j) {
        const double r = L * std::exp2(-0.125 * j);
        const double b = q.integrate(inv2, 0.0, r);
        if (!(b > 0.0) || !std::isfinite(b)) continue;
        best = std::max(best, b * q.integrate(rho1.value, r, L));
    }
    return best;
}

double random_pl(const WeightFunction& rho1, const WeightFunction& rho2, double L, const HardyOptions& opt) {
    std::vector<double> vals(std::max(opt.trials, 0), -kInf);
    parallel_for(opt.trials, opt.threads, [&](int t) {
        std::mt19937_64 rng(trial_seed(opt.seed ^ 0x5a5a5a5aULL, static_cast<std::uint64_t>(t)));
        const int m = std::uniform_int_distribution<int>(2, 12)(rng);
        const double g = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
        std::normal_distribution<double> nd;
        std::vector<double> xs(m + 1), fs(m + 1), Fs(m + 1, 0.0);
        for (int k = 0; k <= m; ++k) {
            xs[k] = L * std::pow(static_cast<double>(k) / m, g);
            fs[k] = nd(rng);
        }
        for (int k = 1; k <= m; ++k) Fs[k] = Fs[k - 1] + 0.5 * (fs[k] + fs[k - 1]) * (xs[k] - xs[k - 1]);
        auto seg = [&](double x) {
            const auto it = std::upper_bound(xs.begin(), xs.end(), x);
            return std::clamp(static_cast<int>(it - xs.begin()) - 1, 0, m - 1);
        };
        auto f = [&](double x) {
            const int k = seg(x);
            const double s = (x - xs[k]) / (xs[k + 1] - xs[k]);
            return fs[k] + s * (fs[k + 1] - fs[k]);
        };
        auto F = [&](double x) {
            const int k = seg(x);
            const double h = xs[k + 1] - xs[k];
            const double d = x - xs[k];
            return Fs[k] + fs[k] * d + 0.5 * (fs[k + 1] - fs[k]) / h * d * d;
        };
        try {
            vals[t] = lz_ratio(rho1, rho2, f, F, L, xs);
        } catch (const DegenerateTestFunction&) {
        }
    });
    return vals.empty() ? -kInf : *std::max_element(vals.begin(), vals.end());
}

// Largest generalized eigenvalue of (int rho1 T phi_i T phi_j, int rho2 phi_i phi_j) on P1 hats
// over nodes L (i/n)^2, both ends free.
double rayleigh_ritz(const WeightFunction& rho1, const WeightFunction& rho2, double L, int n) {
    std::vector<double> xs(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = L * std::pow(static_cast<double>(i) / n, 2.0);
    const int m = n + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m), B = Eigen::MatrixXd::Zero(m, m);
    // integral of each hat
    Eigen::VectorXd mass(m);
    for (int i = 0; i < m; ++i) {
        const double left = i > 0 ? xs[i] - xs[i - 1] : 0.0;
        const double right = i < n ? xs[i + 1] - xs[i] : 0.0;
        mass(i) = 0.5 * (left + right);
    }
    const auto& nodes = Gauss::abscissa();
    const auto& weights = Gauss::weights();
    auto accumulate = [&](int e, double a, double b) {
        // quadrature on [a, b] inside element e = [xs[e], xs[e+1]]
        const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
        const double h = xs[e + 1] - xs[e];
        auto add_point = [&](double x, double w) {
            const double s = (x - xs[e]) / h;
            const double p0 = 1.0 - s, p1 = s;
            // T phi_i(x): full mass for hats ending before element e; partial for e and e+1
            Eigen::VectorXd t = Eigen::VectorXd::Zero(m);
            for (int i = 0; i < e; ++i) t(i) = mass(i);
            const double d = x - xs[e];
            // phi_e on element e decreases from 1, phi_{e+1} increases from 0
            const double left_part = e > 0 ? 0.5 * (xs[e] - xs[e - 1]) : 0.0;
            t(e) = left_part + d - 0.5 * d * d / h;
            t(e + 1) = 0.5 * d * d / h;
            const double r1 = rho1(x), r2 = rho2(x);
            A.noalias() += (w * r1) * t * t.transpose();
            B(e, e) += w * r2 * p0 * p0;
            B(e, e + 1) += w * r2 * p0 * p1;
            B(e + 1, e) += w * r2 * p0 * p1;
            B(e + 1, e + 1) += w * r2 * p1 * p1;
        };
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            add_point(c + hw * nodes[k], hw * weights[k]);
            add_point(c - hw * nodes[k], hw * weights[k]);
        }
    };
    for (int e = 0; e < n; ++e) {
        if (e == 0) {
            // geometric panels toward the singular end
            double b = xs[1];
            for (int j = 0; j < 200; ++j) {
                const double a = 0.5 * b;
                accumulate(0, a, b);
                b = a;
            }
        } else {
            accumulate(e, xs[e], xs[e + 1]);
        }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B);
    if (ges.info() != Eigen::Success) return -kInf;
    return ges.eigenvalues().maxCoeff();
}

}  // namespace

EmpiricalC lz_empirical_best_C(const WeightFunction& rho1, const WeightFunction& rho2, double L,
                               const HardyOptions& options) {
    if (!(L > 0.0)) throw ConfigError("L must be positive");
    if (!std::isfinite(lz_constant_K(rho1, rho2, L)))
        throw ConfigError("lz_empirical_best_C needs a finite K for " + rho1.name + ", " + rho2.name);
    EmpiricalC out;
    out.cosine_family = cosine_family(rho1, rho2, L);
    out.concentrating = concentrating_family(rho1, rho2, L);
    out.random_pl = random_pl(rho1, rho2, L, options);
    out.ritz = rayleigh_ritz(rho1, rho2, L, 128);
    out.value = -kInf;
    for (const auto& [v, name] : {std::pair{out.ritz, "rayleigh_ritz"}, std::pair{out.cosine_family, "cosine"},
                                  std::pair{out.concentrating, "concentrating"}, std::pair{out.random_pl, "random_pl"}}) {
        if (std::isfinite(v) && v > out.value) {
            out.value = v;
            out.witness = name;
        }
    }
    if (!std::isfinite(out.value)) throw DegenerateTestFunction("every empirical-C trial was degenerate");
    return out;
}

}  // namespace kvnet
