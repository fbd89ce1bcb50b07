#include "kvnet/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/SparseLU>
#include <boost/math/tools/minima.hpp>

#include "kvnet/error.hpp"
#include "kvnet/fit.hpp"

namespace kvnet {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using SparseComplex = Eigen::SparseMatrix<Complex>;

MatrixXcd EnergyBasis::to_state(const MatrixXcd& z) const {
    const Index n = Lk.rows();
    MatrixXcd x(2 * n, z.cols());
    const MatrixXcd lk = Lk.cast<Complex>();
    const MatrixXcd lm = Lm.cast<Complex>();
    x.topRows(n) = lk.transpose().triangularView<Eigen::Upper>().solve(z.topRows(n));
    x.bottomRows(n) = lm.transpose().triangularView<Eigen::Upper>().solve(z.bottomRows(n));
    return x;
}

EnergyBasis energy_basis(const AssembledSystem& system, Index budget) {
    const Index n = system.n_u;
    if (2 * n > budget) {
        std::ostringstream os;
        os << "dense energy-basis generator of size " << 2 * n << " exceeds the budget " << budget;
        throw NumericalError(os.str());
    }
    Eigen::LLT<MatrixXd> lk(MatrixXd(system.K));
    Eigen::LLT<MatrixXd> lm(MatrixXd(system.M));
    if (lk.info() != Eigen::Success || lm.info() != Eigen::Success)
        throw NumericalError("stiffness or mass matrix is not positive definite");
    EnergyBasis eb;
    eb.Lk = lk.matrixL();
    eb.Lm = lm.matrixL();
    const auto Lm = eb.Lm.triangularView<Eigen::Lower>();
    const MatrixXd B = Lm.solve(eb.Lk).transpose();
    const MatrixXd LmInvD = Lm.solve(MatrixXd(system.D));
    MatrixXd Dh = Lm.solve(LmInvD.transpose());
    Dh = 0.5 * (Dh + Dh.transpose()).eval();
    eb.S_hat.setZero(2 * n, 2 * n);
    eb.S_hat.topRightCorner(n, n) = B;
    eb.S_hat.bottomLeftCorner(n, n) = -B.transpose();
    eb.S_hat.bottomRightCorner(n, n) = -Dh;
    return eb;
}

SpectrumReport make_spectrum_report(std::vector<Complex> eigenvalues, double band, double tol) {
    SpectrumReport r;
    r.band = band;
    r.tol = tol;
    r.eigenvalues = std::move(eigenvalues);
    std::stable_sort(r.eigenvalues.begin(), r.eigenvalues.end(), [](const Complex& a, const Complex& b) {
        return a.imag() < b.imag() || (a.imag() == b.imag() && a.real() < b.real());
    });
    r.abscissa = -std::numeric_limits<double>::infinity();
    r.min_axis_distance = std::numeric_limits<double>::infinity();
    for (const auto& z : r.eigenvalues) {
        r.abscissa = std::max(r.abscissa, z.real());
        if (band > 0.0 && std::abs(z.imag()) <= band) r.min_axis_distance = std::min(r.min_axis_distance, std::abs(z.real()));
        if (z.real() >= -tol) ++r.near_axis_count;
    }
    return r;
}

SpectrumReport compute_spectrum(const AssembledSystem& system, const SpectrumOptions& options) {
    const EnergyBasis eb = energy_basis(system, options.budget);
    const Index n2 = eb.S_hat.rows();
    MatrixXd a = eb.S_hat;
    std::vector<double> wr(n2), wi(n2);
    MatrixXd vr;
    const char jobvr = options.eigenvectors ? 'V' : 'N';
    if (options.eigenvectors) vr.resize(n2, n2);
    double dummy = 0.0;
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', jobvr, static_cast<lapack_int>(n2), a.data(),
                                          static_cast<lapack_int>(n2), wr.data(), wi.data(), &dummy, 1,
                                          options.eigenvectors ? vr.data() : &dummy,
                                          options.eigenvectors ? static_cast<lapack_int>(n2) : 1);
    if (info != 0) {
        std::ostringstream os;
        os << "dense eigensolver failed (info=" << info << ") on a generator of size " << n2
           << ", ||S_hat||_F=" << eb.S_hat.norm();
        throw NumericalError(os.str());
    }
    std::vector<Complex> eig(n2);
    for (Index i = 0; i < n2; ++i) eig[i] = {wr[i], wi[i]};

    const double band = options.band >= 0.0 ? options.band
                        : system.mesh.nodes.empty() ? std::numeric_limits<double>::infinity()
                                                    : 0.5 / system.mesh.h_max();

    if (!options.eigenvectors) return make_spectrum_report(std::move(eig), band, options.tol);

    MatrixXcd z(n2, n2);
    for (Index j = 0; j < n2; ++j) {
        if (wi[j] == 0.0) {
            z.col(j) = vr.col(j).cast<Complex>();
        } else {
            z.col(j) = vr.col(j).cast<Complex>() + Complex(0.0, 1.0) * vr.col(j + 1).cast<Complex>();
            z.col(j + 1) = z.col(j).conjugate();
            ++j;
        }
    }
    const MatrixXcd x = eb.to_state(z);
    std::vector<Index> perm(n2);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::stable_sort(perm.begin(), perm.end(), [&](Index a, Index b) {
        return eig[a].imag() < eig[b].imag() || (eig[a].imag() == eig[b].imag() && eig[a].real() < eig[b].real());
    });
    SpectrumReport r = make_spectrum_report(eig, band, options.tol);
    r.eigenvectors.resize(n2, n2);
    for (Index i = 0; i < n2; ++i) r.eigenvectors.col(i) = x.col(perm[i]);
    return r;
}

bool check_imaginary_axis_clear(const SpectrumReport& report, double tol) {
    if (!(report.band > 0.0)) return true;
    return std::all_of(report.eigenvalues.begin(), report.eigenvalues.end(), [&](const Complex& z) {
        return std::abs(z.imag()) > report.band || z.real() <= -tol;
    });
}

namespace {

constexpr double kSingularNorm = 1e12;

[[noreturn]] void near_singular(double lambda, double norm) {
    std::ostringstream os;
    os << "i*lambda is within 1e-12 of the spectrum at lambda=" << lambda << " (resolvent norm " << norm << ")";
    throw NumericalError(os.str());
}

double dense_resolvent_norm(const AssembledSystem& system, double lambda) {
    const EnergyBasis eb = energy_basis(system);
    const Index n2 = eb.S_hat.rows();
    MatrixXcd a = -eb.S_hat.cast<Complex>();
    a.diagonal().array() += Complex(0.0, lambda);
    Eigen::BDCSVD<MatrixXcd> svd(a);
    const double smin = svd.singularValues()(n2 - 1);
    if (!(smin > 1.0 / kSingularNorm)) near_singular(lambda, 1.0 / smin);
    return 1.0 / smin;
}

// Solves with i lambda - S and its energy adjoint through the n_u x n_u pencil
// A = K - lambda^2 M + i lambda D; the adjoint uses conj(A).
class ShiftedSolver {
public:
    ShiftedSolver(const AssembledSystem& sys, double lambda)
        : n_(sys.n_u), lambda_(lambda), K_(sys.K.cast<Complex>()), M_(sys.M.cast<Complex>()), D_(sys.D.cast<Complex>()) {
        SparseComplex a = K_ - (lambda * lambda) * M_ + Complex(0.0, lambda) * D_;
        a.makeCompressed();
        lu_.analyzePattern(a);
        lu_.factorize(a);
        if (lu_.info() != Eigen::Success) near_singular(lambda, std::numeric_limits<double>::infinity());
    }

    VectorXcd forward(const VectorXcd& f) const {
        const auto f1 = f.head(n_);
        const auto f2 = f.tail(n_);
        const Complex il(0.0, lambda_);
        const VectorXcd rhs = M_ * f2 + il * (M_ * f1) + D_ * f1;
        const VectorXcd u = lu_.solve(rhs);
        VectorXcd x(2 * n_);
        x.head(n_) = u;
        x.tail(n_) = il * u - f1;
        return x;
    }

    VectorXcd adjoint(const VectorXcd& f) const {
        const auto f1 = f.head(n_);
        const auto f2 = f.tail(n_);
        const Complex il(0.0, lambda_);
        const VectorXcd rhs = -(M_ * f2) - il * (M_ * f1) + D_ * f1;
        const VectorXcd u = lu_.solve(VectorXcd(rhs.conjugate())).conjugate();
        VectorXcd x(2 * n_);
        x.head(n_) = u;
        x.tail(n_) = f1 + il * u;
        return x;
    }

private:
    Index n_;
    double lambda_;
    SparseComplex K_, M_, D_;
    Eigen::SparseLU<SparseComplex, Eigen::COLAMDOrdering<int>> lu_;
};

// Lanczos with full reorthogonalization on R* R in the energy inner product.
double lanczos_resolvent_norm(const AssembledSystem& system, double lambda, double tol = 1e-11) {
    const ShiftedSolver solver(system, lambda);
    const SparseComplex G = system.gram.cast<Complex>();
    const Index n2 = system.state_size();
    auto dot = [&](const VectorXcd& a, const VectorXcd& b) { return b.dot(G * a); };

    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> nd;
    VectorXcd q(n2);
    for (Index i = 0; i < n2; ++i) q(i) = {nd(rng), nd(rng)};
    q /= std::sqrt(dot(q, q).real());

    const int max_iter = static_cast<int>(std::min<Index>(n2, 400));
    std::vector<VectorXcd> basis;
    std::vector<double> alpha, beta;
    double theta = 0.0;
    for (int j = 0; j < max_iter; ++j) {
        basis.push_back(q);
        VectorXcd w = solver.adjoint(solver.forward(q));
        const double a = dot(w, q).real();
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) w -= dot(w, b) * b;
        const double bnorm = std::sqrt(std::max(0.0, dot(w, w).real()));

        const int m = static_cast<int>(alpha.size());
        MatrixXd T = MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
        theta = es.eigenvalues()(m - 1);
        const double resid = bnorm * std::abs(es.eigenvectors()(m - 1, m - 1));
        if (resid <= tol * theta || bnorm <= 1e-14 * theta) break;
        beta.push_back(bnorm);
        q = w / bnorm;
    }
    const double norm = std::sqrt(theta);
    if (!(norm < kSingularNorm)) near_singular(lambda, norm);
    return norm;
}

double norm_with(const AssembledSystem& system, double lambda, ResolventMethod method, double tol) {
    if (method == ResolventMethod::Auto)
        method = system.state_size() <= 400 ? ResolventMethod::Dense : ResolventMethod::Lanczos;
    return method == ResolventMethod::Dense ? dense_resolvent_norm(system, lambda)
                                            : lanczos_resolvent_norm(system, lambda, tol);
}

struct WindowMax {
    double value;
    double at;
};

constexpr int kPolishedPeaks = 3;

WindowMax window_supremum(const AssembledSystem& system, double a, double b, double seed_lambda, double seed_norm,
                          const SweepOptions& opt) {
    WindowMax best{seed_norm, seed_lambda};
    if (!(b > a)) return best;
    const int steps = std::max(8, static_cast<int>(std::ceil((b - a) / opt.scan_step)));
    std::vector<double> xs(steps + 1), fs(steps + 1);
    for (int k = 0; k <= steps; ++k) {
        xs[k] = a + (b - a) * k / steps;
        fs[k] = norm_with(system, xs[k], opt.method, 1e-6);
    }
    // Brent on the bracket of each of the tallest scan maxima; a single bracket can land on a
    // shoulder of one resonance while a taller, narrower one sits between other scan points.
    std::vector<int> peaks;
    for (int k = 0; k <= steps; ++k) {
        const bool left = k == 0 || fs[k] >= fs[k - 1];
        const bool right = k == steps || fs[k] >= fs[k + 1];
        if (left && right) peaks.push_back(k);
    }
    std::sort(peaks.begin(), peaks.end(), [&](int p, int q) { return fs[p] > fs[q]; });
    if (peaks.size() > static_cast<std::size_t>(kPolishedPeaks)) peaks.resize(kPolishedPeaks);
    auto neg = [&](double l) { return -std::log(norm_with(system, l, opt.method, 1e-11)); };
    for (int k : peaks) {
        if (fs[k] > best.value) best = {std::exp(-neg(xs[k])), xs[k]};
        const double lo = xs[std::max(0, k - 1)];
        const double hi = xs[std::min(steps, k + 1)];
        const auto [arg, val] = boost::math::tools::brent_find_minima(neg, lo, hi, 30);
        const WindowMax refined{std::exp(-val), arg};
        if (refined.value > best.value) best = refined;
    }
    return best;
}

}  // namespace

double resolvent_norm(const AssembledSystem& system, double lambda, ResolventMethod method) {
    if (method == ResolventMethod::Auto)
        method = system.state_size() <= 400 ? ResolventMethod::Dense : ResolventMethod::Lanczos;
    return method == ResolventMethod::Dense ? dense_resolvent_norm(system, lambda)
                                            : lanczos_resolvent_norm(system, lambda);
}

double mesh_cutoff(const AssembledSystem& system) {
    if (system.mesh.nodes.empty()) return std::numeric_limits<double>::infinity();
    return 0.5 * M_PI / system.mesh.h_max();
}

ResolventSweep sweep_resolvent(const AssembledSystem& system, double lambda_min, double lambda_max, int points,
                               const SweepOptions& options) {
    ResolventSweep sw;
    sw.lambda_max_admissible = mesh_cutoff(system);
    if (!(lambda_min > 0.0 && lambda_max > lambda_min)) throw ConfigError("sweep needs 0 < lambda_min < lambda_max");
    if (points < 2) throw ConfigError("sweep needs at least two points");
    if (lambda_max > sw.lambda_max_admissible * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(10);
        os << "lambda_max=" << lambda_max << " exceeds the mesh cutoff " << sw.lambda_max_admissible;
        throw ConfigError(os.str());
    }
    const double l0 = std::log(lambda_min);
    const double l1 = std::log(lambda_max);
    sw.lambdas.resize(points);
    for (int i = 0; i < points; ++i)
        sw.lambdas[i] = i == 0 ? lambda_min : i == points - 1 ? lambda_max : std::exp(l0 + (l1 - l0) * i / (points - 1));
    sw.norms.assign(points, 0.0);

    unsigned nthreads = 1;
    if (options.parallel)
        nthreads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    if (options.envelope) {
        sw.envelope.assign(points, 0.0);
        sw.peak_lambdas.assign(points, 0.0);
    }
    auto work = [&] {
        for (int i = next++; i < points; i = next++) {
            try {
                sw.norms[i] = resolvent_norm(system, sw.lambdas[i], options.method);
                if (options.envelope) {
                    const double a = i == 0 ? lambda_min : std::sqrt(sw.lambdas[i - 1] * sw.lambdas[i]);
                    const double b = i == points - 1 ? lambda_max : std::sqrt(sw.lambdas[i] * sw.lambdas[i + 1]);
                    const auto w = window_supremum(system, a, b, sw.lambdas[i], sw.norms[i], options);
                    sw.envelope[i] = w.value;
                    sw.peak_lambdas[i] = w.at;
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (nthreads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < std::min<unsigned>(nthreads, points); ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    if (points >= 16 && std::log10(lambda_max / lambda_min) >= 1.5) {
        const auto g = fit_gamma(sw);
        sw.gamma_hat = g.gamma;
        sw.fit_residual = g.residual;
        sw.fitted = true;
    }
    return sw;
}

GammaFit fit_gamma(const std::vector<double>& lambdas, const std::vector<double>& norms) {
    if (lambdas.size() != norms.size()) throw ConfigError("fit_gamma: lambda and norm series differ in length");
    if (lambdas.size() < 16) throw ConfigError("fit_gamma: need at least 16 grid points");
    if (!(lambdas.front() > 0.0) || std::log10(lambdas.back() / lambdas.front()) < 1.5)
        throw ConfigError("fit_gamma: grid must span at least 1.5 decades");
    std::vector<double> x, y;
    for (std::size_t i = lambdas.size() / 2; i < lambdas.size(); ++i) {
        x.push_back(std::log(lambdas[i]));
        y.push_back(std::log(norms[i]));
    }
    const auto f = fit_line(x, y);
    return {f.slope, f.rms_residual};
}

GammaFit fit_gamma(const ResolventSweep& sweep) {
    return fit_gamma(sweep.lambdas, sweep.envelope.empty() ? sweep.norms : sweep.envelope);
}

PredictedRates predicted_rates(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in [0,1)");
    return {(1.0 - alpha) / (2.0 - alpha), (2.0 - alpha) / (1.0 - alpha)};
}

}  // namespace kvnet
