#include "kvnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kvnet/error.hpp"

namespace kvnet {

StarNetwork::StarNetwork(double length_0, std::vector<DampedEdge> damped_edges)
    : length_0_(length_0), edges_(std::move(damped_edges)) {
    if (!(length_0_ > 0.0)) throw ConfigError("l0 must be positive");
    if (edges_.empty()) throw ConfigError("network needs at least one damped edge");
    for (const auto& e : edges_)
        if (!(e.length > 0.0)) throw ConfigError("edge lengths must be positive");
}

StarNetwork StarNetwork::default_network(double alpha, double kappa) {
    return StarNetwork(1.0, {{1.0, DampingProfile::power(alpha, kappa)}, {1.0, DampingProfile::power(alpha, kappa)}});
}

StarNetwork StarNetwork::undamped_default() {
    return StarNetwork(1.0, {{1.0, DampingProfile::zero()}, {1.0, DampingProfile::zero()}});
}

double StarNetwork::length(int edge) const {
    if (edge == 0) return length_0_;
    return edges_.at(static_cast<std::size_t>(edge - 1)).length;
}

const DampingProfile& StarNetwork::profile(int edge) const {
    if (edge == 0) return zero_;
    return edges_.at(static_cast<std::size_t>(edge - 1)).profile;
}

bool StarNetwork::undamped() const {
    return std::all_of(edges_.begin(), edges_.end(), [](const DampedEdge& e) { return e.profile.is_zero(); });
}

StarNetwork StarNetwork::scaled_damping(double factor) const {
    std::vector<DampedEdge> out;
    for (const auto& e : edges_) {
        DampingProfile::Variant v = e.profile.params();
        if (auto* p = std::get_if<PowerLaw>(&v)) p->kappa *= factor;
        if (auto* p = std::get_if<LogPower>(&v)) p->kappa *= factor;
        if (auto* p = std::get_if<PiecewiseConstant>(&v)) p->level *= factor;
        if (auto* p = std::get_if<Tabulated>(&v))
            for (auto& q : p->points) q.second *= factor;
        out.push_back({e.length, DampingProfile(v)});
    }
    return StarNetwork(length_0_, std::move(out));
}

namespace {

constexpr int kLevels = 12;
constexpr double kConvergenceTol = 1e-5;

// Cubic (4-point) Neville extrapolation to t = 0 over each sliding window.
std::vector<double> extrapolants(const std::vector<double>& t, const std::vector<double>& y) {
    constexpr std::size_t w = 4;
    std::vector<double> out;
    for (std::size_t s = 0; s + w <= y.size(); ++s) {
        double p[w];
        for (std::size_t i = 0; i < w; ++i) p[i] = y[s + i];
        for (std::size_t m = 1; m < w; ++m)
            for (std::size_t i = 0; i + m < w; ++i) {
                const double ti = t[s + i];
                const double tj = t[s + i + m];
                p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
            }
        out.push_back(p[0]);
    }
    return out;
}

std::string format_sequence(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(10);
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << "]";
    return os.str();
}

// Extrapolates y(t) to t = 0 with t = 1/|ln x|, the scale of logarithmic corrections.
double extrapolate_limit(const std::vector<double>& x, const std::vector<double>& y, const char* what) {
    std::vector<double> t(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) t[i] = 1.0 / std::abs(std::log(x[i]));
    const auto e = extrapolants(t, y);
    const double last = e.back();
    const double prev = e[e.size() - 2];
    if (!std::isfinite(last) || std::abs(last - prev) >= kConvergenceTol) {
        std::ostringstream os;
        os << what << " did not converge: samples " << format_sequence(y) << ", extrapolants " << format_sequence(e);
        throw EstimationError(os.str());
    }
    return last;
}

std::vector<double> sample_positive(const RealFunction& d, const std::vector<double>& x) {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        v[i] = d(x[i]);
        if (!(v[i] > 0.0)) {
            std::ostringstream os;
            os << "profile vanishes at x=" << x[i] << " near the vertex: no singular behavior to estimate";
            throw NoSingularityError(os.str());
        }
    }
    return v;
}

}  // namespace

std::vector<double> limit_grid(double length) {
    std::vector<double> x(kLevels);
    x[0] = std::min(length, 1.0) / 4.0;
    for (int k = 1; k < kLevels; ++k) x[k] = x[k - 1] * 0.5;
    return x;
}

AlphaKappaEstimate estimate_alpha_kappa(const RealFunction& d, double length) {
    const auto x = limit_grid(length);
    const auto v = sample_positive(d, x);

    AlphaKappaEstimate est;
    std::vector<double> xm;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        est.slopes.push_back((std::log(v[k + 1]) - std::log(v[k])) / (std::log(x[k + 1]) - std::log(x[k])));
        xm.push_back(std::sqrt(x[k] * x[k + 1]));
    }
    est.alpha = extrapolate_limit(xm, est.slopes, "log-log slope");

    // Ratio d(x)/x^alpha over the four finest levels.
    std::vector<double> q;
    for (std::size_t k = x.size() - 4; k < x.size(); ++k) q.push_back(v[k] / std::pow(x[k], est.alpha));
    const double last = q.back();
    if (std::abs(last - q[q.size() - 2]) <= kConvergenceTol * std::abs(last)) {
        est.kappa = last;
        est.mode = KappaMode::Finite;
        return est;
    }
    bool shrinking = true;
    bool growing = true;
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
        const double r = q[i + 1] / q[i];
        shrinking = shrinking && r < 1.0;
        growing = growing && r > 1.0;
    }
    if (shrinking) {
        est.kappa = 0.0;
        est.mode = KappaMode::ZeroLimit;
        return est;
    }
    if (growing) {
        // Sub-power growth (e.g. |ln x|^beta): the limit is 0 for every exponent below alpha_hat.
        est.kappa = 0.0;
        est.mode = KappaMode::LogDivergent;
        return est;
    }
    throw EstimationError("d(x)/x^alpha has no monotone trend: " + format_sequence(q));
}

AlphaKappaEstimate estimate_alpha_kappa(const DampingProfile& profile, double length) {
    return estimate_alpha_kappa([&](double x) { return profile.value(x); }, length);
}

double estimate_eta(const RealFunction& d, const RealFunction& d_prime, double length) {
    const auto x = limit_grid(length);
    const auto v = sample_positive(d, x);
    std::vector<double> r(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) r[k] = x[k] * d_prime(x[k]) / v[k];
    return extrapolate_limit(x, r, "x d'/d");
}

double estimate_eta(const DampingProfile& profile, double length) {
    return estimate_eta([&](double x) { return profile.value(x); }, [&](double x) { return profile.derivative(x); },
                        length);
}

std::vector<ValidationReport> validate_assumptions(const StarNetwork& network, const ValidationTolerances& tol) {
    std::vector<ValidationReport> out;
    for (int j = 1; j <= network.damped_count(); ++j) {
        const double len = network.length(j);
        const DampingProfile& p = network.profile(j);
        ValidationReport rep;
        rep.edge = j;
        rep.tolerances = tol;
        rep.sup_bound = p.sup_bound(len);

        // A1: longest run of scan points with d >= threshold, kinks included as exact samples.
        std::vector<double> xs;
        for (int i = 0; i <= tol.scan_points; ++i) xs.push_back(len * i / tol.scan_points);
        for (double k : p.kinks())
            if (k >= 0.0 && k <= len) xs.push_back(k);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        double best = 0.0;
        std::size_t i = 0;
        try {
            while (i < xs.size()) {
                if (p.value(xs[i]) < tol.support_threshold) {
                    ++i;
                    continue;
                }
                std::size_t k = i;
                while (k + 1 < xs.size() && p.value(xs[k + 1]) >= tol.support_threshold) ++k;
                if (xs[k] - xs[i] > best) {
                    best = xs[k] - xs[i];
                    rep.witness_a = xs[i];
                    rep.witness_b = xs[k];
                }
                i = k + 1;
            }
        } catch (const DomainError& e) {
            rep.note += std::string("support scan: ") + e.what() + "; ";
        }
        rep.a1_ok = best > 0.0 && std::isfinite(rep.sup_bound);

        // A2 and A3.
        const auto& v = p.params();
        try {
            const auto ak = estimate_alpha_kappa(p, len);
            rep.a2_applicable = true;
            rep.alpha_hat = ak.alpha;
            rep.kappa_hat = ak.kappa;
            rep.kappa_mode = ak.mode;
            bool ok = ak.alpha > 0.0 && ak.alpha < 1.0 && ak.kappa >= 0.0;
            if (const auto* pl = std::get_if<PowerLaw>(&v)) {
                ok = ok && std::abs(ak.alpha - pl->alpha) <= tol.param_tol &&
                     std::abs(ak.kappa - pl->kappa) <= tol.param_tol * std::max(1.0, pl->kappa);
            } else if (const auto* lp = std::get_if<LogPower>(&v)) {
                ok = ok && std::abs(ak.alpha - lp->alpha_prime) <= tol.log_param_tol && ak.kappa == 0.0;
            }
            rep.a2_ok = ok;
        } catch (const Error& e) {
            rep.note += std::string("A2 not applicable: ") + e.what() + "; ";
        }
        try {
            const double eta = estimate_eta(p, len);
            rep.a3_applicable = true;
            rep.eta_hat = eta;
            bool ok = eta >= 0.0 && eta < 1.0;
            if (const auto* pl = std::get_if<PowerLaw>(&v)) ok = ok && std::abs(eta - pl->alpha) <= tol.param_tol;
            if (const auto* lp = std::get_if<LogPower>(&v))
                ok = ok && std::abs(eta - lp->alpha_prime) <= tol.log_param_tol;
            rep.a3_ok = ok;
        } catch (const Error& e) {
            rep.note += std::string("A3 not applicable: ") + e.what() + "; ";
        }
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace kvnet
