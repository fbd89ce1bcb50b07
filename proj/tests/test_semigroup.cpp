#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "doctest.h"
#include "kvnet/error.hpp"
#include "kvnet/semigroup.hpp"
#include "kvnet/spectral.hpp"

using namespace kvnet;

namespace {

AssembledSystem toy(double delta) {
    return from_matrices(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Constant(1, 1, delta));
}

double gram_norm(const AssembledSystem& s, const Eigen::VectorXd& x) { return std::sqrt(x.dot(s.gram * x)); }

}  // namespace

TEST_CASE("energy quadratic form") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 10, 2.0);
    CHECK(energy(sys, StateVector::zero(sys)) == 0.0);
    StateVector s = StateVector::zero(sys);
    s.x(sys.n_u + 3) = 1.0;
    CHECK(energy(sys, s) == doctest::Approx(0.5 * sys.M.coeff(3, 3)).epsilon(1e-15));
    const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(sys.state_size(), 0.3, -1.1);
    const StateVector a(r, sys.n_u), b(2.0 * r, sys.n_u);
    CHECK(energy(sys, b) == doctest::Approx(4.0 * energy(sys, a)).epsilon(1e-14));
    CHECK_THROWS_AS(energy(sys, StateVector(Eigen::VectorXd::Zero(4), 2)), NumericalError);
    CHECK_THROWS_AS(StateVector(Eigen::VectorXd::Zero(3), 2), NumericalError);
}

TEST_CASE("Cayley step on the one-DOF toy matches the hand-solved 2x2 system") {
    // S = [0, 1; -1, -1], tau = 0.05. (I - tau S) x+ = (I + tau S) x with x = (1, 0):
    // rhs = (1, -tau); det = 1 + tau + tau^2; Cramer's rule gives u+, v+.
    const double dt = 0.1, tau = dt / 2;
    const double det = 1 + tau + tau * tau;
    const double u1 = ((1 + tau) - tau * tau) / det;
    const double v1 = (-tau - tau) / det;
    const auto sys = toy(1.0);
    const StateVector x0(Eigen::Vector2d(1.0, 0.0), 1);
    const StateVector x1 = step(sys, x0, dt);
    CHECK(x1.x(0) == doctest::Approx(u1).epsilon(1e-14));
    CHECK(x1.x(1) == doctest::Approx(v1).epsilon(1e-14));

    // one-step dissipation residuals by hand
    const Trajectory tr = simulate(sys, x0, dt, dt);
    REQUIRE(tr.energy.size() == 2);
    const double e0 = 0.5, e1 = 0.5 * (u1 * u1 + v1 * v1);
    CHECK(tr.energy[1] == doctest::Approx(e1).epsilon(1e-14));
    const auto rt = dissipation_residual(sys, tr);
    CHECK(rt[1] == doctest::Approx(std::abs(e1 - e0 + 0.5 * dt * v1 * v1)).epsilon(1e-10));
    const auto rm = dissipation_residual(sys, tr, DissipationSampling::Midpoint);
    CHECK(std::abs(e1 - e0 + dt * (v1 / 2) * (v1 / 2)) < 1e-15);
    CHECK(rm[1] < 1e-15);
}

TEST_CASE("step edge cases") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 10, 2.0);
    CHECK(step(sys, StateVector::zero(sys), 0.01).x.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(CayleyStepper(sys, 0.0), ConfigError);
    CHECK_THROWS_AS(simulate(sys, StateVector::zero(sys), -1.0, 0.01), ConfigError);
}

TEST_CASE("undamped Cayley step is a gram isometry") {
    const auto sys = discretize(StarNetwork::undamped_default(), 20, 2.0);
    const StateVector x0 = make_initial_data(sys, InitialKind::PolynomialBump, 1);
    const StateVector x1 = step(sys, x0, 0.05);
    CHECK(std::abs(energy(sys, x1) - energy(sys, x0)) <= 1e-12 * energy(sys, x0));

    const Trajectory tr = simulate(sys, x0, 100.0, 0.01);
    REQUIRE(tr.energy.size() == 10001);
    CHECK(std::abs(tr.energy.back() - tr.energy.front()) <= 1e-10 * tr.energy.front());
    for (double r : dissipation_residual(sys, tr)) CHECK(r <= 1e-12);
}

TEST_CASE("damped energy never increases") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 20, 2.0);
    const StateVector x0 = make_initial_data(sys, InitialKind::RandomSmooth, 1);
    const Trajectory tr = simulate(sys, x0, 20.0, 0.01);
    for (std::size_t k = 1; k < tr.energy.size(); ++k) CHECK(tr.energy[k] <= tr.energy[k - 1] * (1 + 1e-14));
}

TEST_CASE("simulation agrees with eigendecomposition propagation") {
    const auto sys = build_generator(discretize(StarNetwork::default_network(0.5), 10, 2.0));
    const StateVector x0 = make_initial_data(sys, InitialKind::PolynomialBump, 1);
    const double T = 50.0, dt = 0.01;
    const Trajectory tr = simulate(sys, x0, T, dt, 5000);
    REQUIRE(tr.snapshots.size() == 2);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(sys.generator.cast<std::complex<double>>());
    const Eigen::MatrixXcd V = es.eigenvectors();
    const Eigen::VectorXcd c = V.partialPivLu().solve(x0.x.cast<std::complex<double>>());
    const double tau = dt / 2;
    Eigen::VectorXcd cay(c.size()), ex(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const std::complex<double> l = es.eigenvalues()(i);
        cay(i) = c(i) * std::pow((1.0 + tau * l) / (1.0 - tau * l), 5000);
        ex(i) = c(i) * std::exp(l * T);
    }
    const Eigen::VectorXd x_cay = (V * cay).real();
    const Eigen::VectorXd x_exact = (V * ex).real();
    const Eigen::VectorXd x_sim = tr.snapshots[1];
    CHECK(gram_norm(sys, x_sim - x_cay) <= 1e-9 * gram_norm(sys, x0.x));
    const double e_exact = 0.5 * x_exact.dot(sys.gram * x_exact);
    CHECK(tr.energy.back() == doctest::Approx(e_exact).epsilon(1e-3));
    CHECK(tr.energy.back() < 0.99 * tr.energy.front());
}

TEST_CASE("trapezoid dissipation residual is second order in dt") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 30, 2.0);
    const StateVector x0 = make_initial_data(sys, InitialKind::PolynomialBump, 1);
    auto maxres = [&](double dt) {
        const auto r = dissipation_residual(sys, simulate(sys, x0, 10.0, dt));
        return *std::max_element(r.begin(), r.end());
    };
    const double ratio = maxres(0.02) / maxres(0.01);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
    const auto rm = dissipation_residual(sys, simulate(sys, x0, 10.0, 0.01), DissipationSampling::Midpoint);
    CHECK(*std::max_element(rm.begin(), rm.end()) < 1e-13);
}

TEST_CASE("dissipation residual needs the running integral") {
    const auto sys = toy(1.0);
    Trajectory tr = simulate(sys, StateVector(Eigen::Vector2d(1.0, 0.0), 1), 1.0, 0.1);
    tr.dissipation.clear();
    CHECK_THROWS_AS(dissipation_residual(sys, tr), NumericalError);
}

TEST_CASE("initial data kinds") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 20, 2.0);
    const SpectrumReport sp = compute_spectrum(sys, {.eigenvectors = true});
    InitialDataOptions opt;
    opt.spectrum = &sp;
    for (auto kind : {InitialKind::EigenLowFreq, InitialKind::PolynomialBump, InitialKind::RandomSmooth})
        for (int k : {0, 1, 2}) {
            const StateVector x = make_initial_data(sys, kind, k, opt);
            CHECK(energy(sys, x) > 0.0);
            // S^2 of the bump cancels heavily at the vertex, so the norm itself carries ~1e-11 rounding
            CHECK(graph_norm(sys, x, k) == doctest::Approx(1.0).epsilon(1e-9));
        }
    const StateVector r0 = make_initial_data(sys, InitialKind::RandomSmooth, 0);
    CHECK(gram_norm(sys, r0.x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(make_initial_data(sys, InitialKind::EigenLowFreq, 1), ConfigError);
    CHECK_THROWS_AS(make_initial_data(sys, InitialKind::RandomSmooth, -1), ConfigError);

    // fixed seed, fixed data
    const StateVector a = make_initial_data(sys, InitialKind::RandomSmooth, 1);
    const StateVector b = make_initial_data(sys, InitialKind::RandomSmooth, 1);
    CHECK(a.x == b.x);
    InitialDataOptions other;
    other.seed = 99;
    CHECK(a.x != make_initial_data(sys, InitialKind::RandomSmooth, 1, other).x);
}

TEST_CASE("eigen_lowfreq data lives on the lowest string frequencies") {
    // Undamped N = 1, l0 = l1 = 1 is a Dirichlet string of length 2: frequencies k pi / 2.
    const StarNetwork net(1.0, {{1.0, DampingProfile::zero()}});
    const auto sys = discretize(net, 50, 1.0);
    const SpectrumReport sp = compute_spectrum(sys, {.eigenvectors = true});
    InitialDataOptions opt;
    opt.spectrum = &sp;
    opt.modes = 6;
    const StateVector x = make_initial_data(sys, InitialKind::EigenLowFreq, 1, opt);

    const Eigen::MatrixXd G(sys.gram);
    double kept = 0.0, total = 0.0;
    for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i) {
        const Eigen::VectorXcd phi = sp.eigenvectors.col(static_cast<Eigen::Index>(i));
        const std::complex<double> c = (phi.adjoint() * G * x.x.cast<std::complex<double>>())(0) /
                                       (phi.adjoint() * G * phi)(0).real();
        const double w = std::norm(c) * (phi.adjoint() * G * phi)(0).real();
        total += w;
        const double f = std::abs(sp.eigenvalues[i].imag());
        if (f < 6.5 * std::numbers::pi / 2) {
            kept += w;
            if (w > 1e-8) {
                const double k = std::round(f / (std::numbers::pi / 2));
                CHECK(std::abs(f - k * std::numbers::pi / 2) < 1e-2 * k);
            }
        }
    }
    CHECK(kept >= (1 - 1e-10) * total);
}

TEST_CASE("decay fit on synthetic power laws") {
    Trajectory tr;
    tr.dt = 0.1;
    for (int i = 0; i <= 2000; ++i) {
        tr.t.push_back(0.1 * i);
        tr.energy.push_back(std::pow(1.0 + 0.1 * i, -3.0));
    }
    const DecayFit f = fit_decay(tr, {0.5, 1.0}, 0.5, 1);
    CHECK(f.slope == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(f.predicted_slope == doctest::Approx(-6.0));
    CHECK(f.t_a == doctest::Approx(100.0));
    CHECK(f.t_b == doctest::Approx(200.0));
    CHECK_FALSE(f.window_shrunk);
    CHECK(f.residual < 1e-12);

    Trajectory fast = tr;
    for (std::size_t i = 0; i < fast.t.size(); ++i) fast.energy[i] = std::exp(-0.2 * fast.t[i]);
    const DecayFit g = fit_decay(fast, {0.5, 1.0}, 0.5, 1);
    CHECK(g.window_shrunk);
    CHECK(g.t_b < 140.0);

    Trajectory brief = tr;
    brief.t.resize(60);
    brief.energy.resize(60);
    CHECK_THROWS_AS(fit_decay(brief, {0.5, 1.0}, 0.5, 1), EstimationError);
    CHECK_THROWS_AS(fit_decay(tr, {0.8, 0.5}, 0.5, 1), ConfigError);
}

TEST_CASE("predicted decay slope") {
    CHECK(predicted_decay_slope(0.5, 1) == doctest::Approx(-6.0));
    CHECK(predicted_decay_slope(0.0, 1) == doctest::Approx(-4.0));
    CHECK(predicted_decay_slope(0.0, 2) == doctest::Approx(-8.0));
    CHECK_THROWS_AS(predicted_decay_slope(1.0, 1), DomainError);
}
