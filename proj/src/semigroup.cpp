#include "kvnet/semigroup.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "kvnet/error.hpp"
#include "kvnet/fit.hpp"

namespace kvnet {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

void check_dims(const AssembledSystem& system, const StateVector& s) {
    if (s.n_u != system.n_u || s.x.size() != 2 * system.n_u) {
        std::ostringstream os;
        os << "state of size " << s.x.size() << " does not fit a system with 2 n_u = " << 2 * system.n_u;
        throw NumericalError(os.str());
    }
}

double gram_norm2(const AssembledSystem& system, const VectorXd& x) {
    const Index n = system.n_u;
    return x.head(n).dot(system.K * x.head(n)) + x.tail(n).dot(system.M * x.tail(n));
}

}  // namespace

StateVector::StateVector(VectorXd values, Index nu) : x(std::move(values)), n_u(nu) {
    if (x.size() != 2 * n_u) throw NumericalError("state length must be 2 n_u");
}

StateVector StateVector::zero(const AssembledSystem& system) {
    return StateVector(VectorXd::Zero(2 * system.n_u), system.n_u);
}

double energy(const AssembledSystem& system, const StateVector& state) {
    check_dims(system, state);
    return 0.5 * gram_norm2(system, state.x);
}

CayleyStepper::CayleyStepper(const AssembledSystem& system, double dt) : sys_(&system), dt_(dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const double tau = 0.5 * dt;
    const SparseMatrix a = system.M + tau * system.D + (tau * tau) * system.K;
    solver_.compute(a);
    if (solver_.info() != Eigen::Success) throw NumericalError("Cayley step matrix could not be factorized");
}

StateVector CayleyStepper::step(const StateVector& state) const {
    check_dims(*sys_, state);
    const double tau = 0.5 * dt_;
    const VectorXd u = state.u();
    const VectorXd v = state.v();
    const VectorXd rhs = sys_->M * v - tau * (sys_->K * u + sys_->D * v) - tau * (sys_->K * (u + tau * v));
    const VectorXd vp = solver_.solve(rhs);
    StateVector out = state;
    out.x.head(state.n_u) = u + tau * (v + vp);
    out.x.tail(state.n_u) = vp;
    return out;
}

StateVector step(const AssembledSystem& system, const StateVector& state, double dt) {
    return CayleyStepper(system, dt).step(state);
}

Trajectory simulate(const AssembledSystem& system, const StateVector& initial, double T, double dt,
                    int snapshot_stride) {
    if (!(T > 0.0)) throw ConfigError("horizon T must be positive");
    const CayleyStepper stepper(system, dt);
    check_dims(system, initial);
    const auto steps = static_cast<long>(std::llround(T / dt));

    Trajectory tr;
    tr.dt = dt;
    tr.snapshot_stride = snapshot_stride;
    tr.t.reserve(steps + 1);
    tr.energy.reserve(steps + 1);
    tr.dissipation.reserve(steps + 1);
    tr.dissipation_midpoint.reserve(steps + 1);

    StateVector x = initial;
    tr.t.push_back(0.0);
    tr.energy.push_back(energy(system, x));
    tr.dissipation.push_back(0.0);
    tr.dissipation_midpoint.push_back(0.0);
    if (snapshot_stride > 0) tr.snapshots.push_back(x.x);

    VectorXd v = x.v();
    double vdv = v.dot(system.D * v);
    for (long k = 1; k <= steps; ++k) {
        StateVector next = stepper.step(x);
        const VectorXd vn = next.v();
        const double vdv_next = vn.dot(system.D * vn);
        const VectorXd vbar = 0.5 * (v + vn);
        tr.t.push_back(k * dt);
        tr.energy.push_back(energy(system, next));
        tr.dissipation.push_back(tr.dissipation.back() + 0.5 * dt * (vdv + vdv_next));
        tr.dissipation_midpoint.push_back(tr.dissipation_midpoint.back() + dt * vbar.dot(system.D * vbar));
        if (snapshot_stride > 0 && k % snapshot_stride == 0) tr.snapshots.push_back(next.x);
        x = std::move(next);
        v = vn;
        vdv = vdv_next;
    }
    return tr;
}

std::vector<double> dissipation_residual(const AssembledSystem& system, const Trajectory& trajectory,
                                         DissipationSampling sampling) {
    const auto& d = sampling == DissipationSampling::Trapezoid ? trajectory.dissipation
                                                               : trajectory.dissipation_midpoint;
    if (d.empty() || d.size() != trajectory.energy.size())
        throw NumericalError("trajectory carries no dissipation integral");
    if (!trajectory.snapshots.empty() && trajectory.snapshots.front().size() != 2 * system.n_u)
        throw NumericalError("trajectory does not belong to this system");
    std::vector<double> r(d.size());
    const double e0 = trajectory.energy.front();
    for (std::size_t k = 0; k < d.size(); ++k) r[k] = std::abs(trajectory.energy[k] - e0 + d[k]);
    return r;
}

double graph_norm(const AssembledSystem& system, const StateVector& state, int k) {
    check_dims(system, state);
    if (k < 0) throw ConfigError("k must be nonnegative");
    double s = gram_norm2(system, state.x);
    if (k == 0) return std::sqrt(s);
    const GeneratorOperator op(system);
    VectorXd y = state.x;
    for (int j = 1; j <= k; ++j) {
        y = op.apply(y);
        s += gram_norm2(system, y);
    }
    return std::sqrt(s);
}

namespace {

VectorXd eigen_lowfreq(const AssembledSystem& system, const InitialDataOptions& opt, std::mt19937_64& rng) {
    if (opt.spectrum == nullptr || opt.spectrum->eigenvectors.size() == 0)
        throw ConfigError("eigen_lowfreq needs a computed spectrum with eigenvectors");
    const SpectrumReport& sp = *opt.spectrum;
    const Index n2 = 2 * system.n_u;
    if (sp.eigenvectors.rows() != n2) throw NumericalError("spectrum does not belong to this system");

    std::vector<Index> pos;
    for (Index i = 0; i < static_cast<Index>(sp.eigenvalues.size()); ++i)
        if (sp.eigenvalues[i].imag() > 0.0) pos.push_back(i);  // sorted by Im already
    const Index m = std::min<Index>(opt.modes, static_cast<Index>(pos.size()));
    if (m == 0) throw ConfigError("spectrum has no oscillatory eigenvalues");

    MatrixXcd V(n2, 2 * m);
    for (Index j = 0; j < m; ++j) {
        V.col(2 * j) = sp.eigenvectors.col(pos[j]);
        V.col(2 * j + 1) = sp.eigenvectors.col(pos[j]).conjugate();
    }
    std::normal_distribution<double> nd;
    VectorXd r(n2);
    for (Index i = 0; i < n2; ++i) r(i) = nd(rng);

    const Eigen::SparseMatrix<Complex> G = system.gram.cast<Complex>();
    const MatrixXcd GV = G * V;
    const MatrixXcd A = V.adjoint() * GV;
    const VectorXcd b = GV.adjoint() * r.cast<Complex>();
    const VectorXcd c = A.completeOrthogonalDecomposition().solve(b);
    return (V * c).real();
}

VectorXd polynomial_bump(const AssembledSystem& system) {
    if (system.mesh.nodes.empty()) throw ConfigError("polynomial_bump needs a meshed system");
    const Index n = system.n_u;
    VectorXd x = VectorXd::Zero(2 * n);
    const auto& mesh = system.mesh;
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& nodes = mesh.nodes[e];
        const double len = nodes.back();
        for (int i = 0; i + 1 < static_cast<int>(nodes.size()); ++i) {
            const Index g = system.dofs.global(e, i);
            const double s = nodes[i] / len;
            x(g) = std::pow(1.0 - s, 3) * (1.0 + 3.0 * s);
        }
    }
    return x;
}

// x = L^-T z with gram = L L^T and z standard normal: white noise in the energy norm.
VectorXd energy_white_noise(const AssembledSystem& system, std::mt19937_64& rng) {
    const Index n = system.n_u;
    std::normal_distribution<double> nd;
    VectorXd x(2 * n);
    for (const auto& [block, offset] : {std::pair{&system.K, Index{0}}, std::pair{&system.M, n}}) {
        Eigen::SimplicialLLT<SparseMatrix> llt(*block);
        if (llt.info() != Eigen::Success) throw NumericalError("gram block is not positive definite");
        VectorXd z(n);
        for (Index i = 0; i < n; ++i) z(i) = nd(rng);
        // A = P^T L L^T P, so y = P^T L^-T z has y^T A y = |z|^2
        const VectorXd w = llt.matrixU().solve(z);
        x.segment(offset, n) = llt.permutationPinv() * w;
    }
    return x;
}

// Discrete low-pass: each application of (M + K / cutoff^2)^-1 M scales an undamped mode of
// frequency w by 1 / (1 + w^2 / cutoff^2). Keeps the random state off the P1 band edge,
// whose nearly undamped modes would otherwise dominate late-time energy.
constexpr int kLowPassOrder = 4;

void low_pass(const AssembledSystem& system, VectorXd& x) {
    const double cutoff = mesh_cutoff(system);
    if (!std::isfinite(cutoff)) return;
    const Index n = system.n_u;
    Eigen::SimplicialLDLT<SparseMatrix> solver(SparseMatrix(system.M + (1.0 / (cutoff * cutoff)) * system.K));
    if (solver.info() != Eigen::Success) throw NumericalError("low-pass matrix could not be factorized");
    for (int p = 0; p < kLowPassOrder; ++p)
        for (const Index offset : {Index{0}, n}) x.segment(offset, n) = solver.solve(VectorXd(system.M * x.segment(offset, n)));
}

VectorXd random_smooth(const AssembledSystem& system, int k, std::mt19937_64& rng) {
    const Index n = system.n_u;
    VectorXd x = energy_white_noise(system, rng);
    low_pass(system, x);
    if (k == 0) return x;
    // (I - S) y = x  <=>  y1 - y2 = x1,  M y2 + K y1 + D y2 = M x2
    Eigen::SimplicialLDLT<SparseMatrix> solver(SparseMatrix(system.M + system.D + system.K));
    if (solver.info() != Eigen::Success) throw NumericalError("smoothing matrix could not be factorized");
    for (int j = 0; j < k; ++j) {
        const VectorXd x1 = x.head(n);
        const VectorXd x2 = x.tail(n);
        const VectorXd y2 = solver.solve(VectorXd(system.M * x2 - system.K * x1));
        x.head(n) = x1 + y2;
        x.tail(n) = y2;
    }
    return x;
}

}  // namespace

StateVector make_initial_data(const AssembledSystem& system, InitialKind kind, int k, const InitialDataOptions& options) {
    if (k < 0) throw ConfigError("k must be nonnegative");
    std::mt19937_64 rng(options.seed);
    VectorXd x;
    switch (kind) {
        case InitialKind::EigenLowFreq: x = eigen_lowfreq(system, options, rng); break;
        case InitialKind::PolynomialBump: x = polynomial_bump(system); break;
        case InitialKind::RandomSmooth: x = random_smooth(system, k, rng); break;
    }
    StateVector s(std::move(x), system.n_u);
    const double g = graph_norm(system, s, k);
    if (!(g > 0.0)) throw NumericalError("initial data vanished");
    s.x /= g;
    return s;
}

double predicted_decay_slope(double alpha, int k) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in [0,1)");
    return -2.0 * k * (2.0 - alpha) / (1.0 - alpha);
}

DecayFit fit_decay(const Trajectory& trajectory, std::pair<double, double> window_fraction, double alpha, int k) {
    const auto [f0, f1] = window_fraction;
    if (!(f0 >= 0.0 && f0 < f1 && f1 <= 1.0)) throw ConfigError("window fractions must satisfy 0 <= f0 < f1 <= 1");
    if (trajectory.t.size() < 2) throw EstimationError("trajectory is empty");
    DecayFit f;
    f.predicted_slope = predicted_decay_slope(alpha, k);
    const double T = trajectory.t.back();
    f.t_a = f0 * T;
    f.t_b = f1 * T;
    const double floor = 1e-12 * trajectory.energy.front();
    std::vector<double> lx, ly;
    double last = f.t_a;
    for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
        const double t = trajectory.t[i];
        if (t < f.t_a || t > f.t_b) continue;
        if (!(trajectory.energy[i] > floor)) {
            f.window_shrunk = true;
            break;
        }
        lx.push_back(std::log1p(t));
        ly.push_back(std::log(trajectory.energy[i]));
        last = t;
    }
    if (f.window_shrunk) f.t_b = last;
    f.samples = static_cast<int>(lx.size());
    if (lx.size() < 50) {
        std::ostringstream os;
        os << "decay window [" << f.t_a << ", " << f.t_b << "] holds " << lx.size()
           << " usable samples, need at least 50";
        throw EstimationError(os.str());
    }
    const LineFit lf = fit_line(lx, ly);
    f.slope = lf.slope;
    f.residual = lf.rms_residual;
    return f;
}

}  // namespace kvnet
