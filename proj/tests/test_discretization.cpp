#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "kvnet/discretization.hpp"
#include "kvnet/error.hpp"

using namespace kvnet;

namespace {

StarNetwork pendant(DampingProfile p = DampingProfile::zero()) { return StarNetwork(1.0, {{1.0, p}}); }

double lowest_frequency(int n) {
    const auto sys = discretize(pendant(), n, 1.0);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(sys.K), Eigen::MatrixXd(sys.M));
    return std::sqrt(es.eigenvalues()(0));
}

}  // namespace

TEST_CASE("build_mesh node placement") {
    auto m = build_mesh(pendant(), 2, 1.0);
    CHECK(m.nodes[1] == std::vector<double>{0.0, 0.5, 1.0});
    m = build_mesh(pendant(), 2, 2.0);
    CHECK(m.nodes[1] == std::vector<double>{0.0, 0.25, 1.0});
    CHECK(m.nodes[0] == std::vector<double>{0.0, 0.5, 1.0});  // the elastic edge stays uniform
    const StarNetwork two(2.0, {{2.0, DampingProfile::zero()}});
    m = build_mesh(two, 4, 1.0);
    CHECK(m.nodes[1] == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK(m.grading == std::vector<double>{1.0, 1.0});
}

TEST_CASE("graded meshes cluster at the vertex") {
    const auto m = build_mesh(StarNetwork::default_network(0.5), 50, 2.0);
    for (int e = 0; e < m.edge_count(); ++e) {
        const auto& x = m.nodes[e];
        CHECK(x.front() == 0.0);
        CHECK(x.back() == 1.0);
        for (std::size_t i = 1; i < x.size(); ++i) CHECK(x[i] > x[i - 1]);
        if (e > 0) CHECK(x[1] - x[0] == doctest::Approx(m.h_min()));
    }
}

TEST_CASE("build_mesh rejects bad parameters") {
    CHECK_THROWS_AS(build_mesh(pendant(), 1, 1.0), ConfigError);
    CHECK_THROWS_AS(build_mesh(pendant(), 4, 0.5), ConfigError);
}

TEST_CASE("two-element pendant stiffness equals the hand-assembled string") {
    // String of length 2 through the vertex, h = 0.5, interior nodes (edge 0 x=0.5, vertex, edge 1 x=0.5).
    // DOF order is vertex, edge 0 node, edge 1 node, so (1/h) tridiag(-1, 2, -1) becomes:
    const auto sys = assemble(pendant(), build_mesh(pendant(), 2, 1.0));
    REQUIRE(sys.n_u == 3);
    Eigen::Matrix3d K;
    K << 4, -2, -2, -2, 4, 0, -2, 0, 4;
    CHECK(Eigen::Matrix3d(Eigen::MatrixXd(sys.K)) == K);
    Eigen::Matrix3d M;
    const double h = 0.5;
    M << 2 * h / 3, h / 6, h / 6, h / 6, 2 * h / 3, 0, h / 6, 0, 2 * h / 3;
    CHECK((Eigen::Matrix3d(Eigen::MatrixXd(sys.M)) - M).cwiseAbs().maxCoeff() < 1e-16);
    CHECK(sys.D.nonZeros() == 0);
    CHECK_FALSE(sys.damped);
}

TEST_CASE("power-law damping element integrals") {
    // Edge 1 elements [0, 0.5] and [0.5, 1]; d = sqrt(x). Exact antiderivative (2/3) x^{3/2}.
    const auto sys = assemble(pendant(DampingProfile::power(0.5)), build_mesh(pendant(), 2, 1.0));
    const Eigen::MatrixXd D(sys.D);
    const double h = 0.5;
    const double e1 = (2.0 / 3.0) * std::pow(h, 1.5) / (h * h);
    const double e2 = (2.0 / 3.0) * (1.0 - std::pow(h, 1.5)) / (h * h);
    // the element touching the singular endpoint carries the 4-point Gauss error of sqrt(x)
    CHECK(D(0, 0) == doctest::Approx(e1).epsilon(5e-3));
    CHECK(D(0, 2) == doctest::Approx(-e1).epsilon(5e-3));
    CHECK(D(2, 2) == doctest::Approx(e1 + e2).epsilon(2e-3));
    CHECK(D(1, 1) == 0.0);
    // the smooth element alone is integrated far more accurately
    const double via_d22 = D(2, 2) - (-D(0, 2));
    CHECK(via_d22 == doctest::Approx(e2).epsilon(1e-6));
}

TEST_CASE("assembled matrices are exactly symmetric") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 30, 2.0);
    const Eigen::MatrixXd K(sys.K), M(sys.M), D(sys.D);
    CHECK(K == K.transpose());
    CHECK(M == M.transpose());
    CHECK(D == D.transpose());
    CHECK(sys.n_u == 1 + 3 * 29);
    Eigen::LLT<Eigen::MatrixXd> lk(K), lm(M);
    CHECK(lk.info() == Eigen::Success);
    CHECK(lm.info() == Eigen::Success);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(D).eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("zero profiles give a zero damping matrix") {
    const auto sys = discretize(StarNetwork::undamped_default(), 10, 2.0);
    CHECK(Eigen::MatrixXd(sys.D).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generator block structure and discrete dissipation") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 12, 2.0, true);
    const Eigen::Index n = sys.n_u;
    const Eigen::MatrixXd& S = sys.generator;
    CHECK((S.topLeftCorner(n, n)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((S.topRightCorner(n, n) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd M(sys.M);
    CHECK((M * S.bottomLeftCorner(n, n) + Eigen::MatrixXd(sys.K)).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd G(sys.gram);
    const Eigen::MatrixXd D(sys.D);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 1000; ++t) {
        Eigen::VectorXcd x(2 * n);
        for (Eigen::Index i = 0; i < 2 * n; ++i) x(i) = {nd(rng), nd(rng)};
        const double nx = (x.adjoint() * G * x)(0).real();
        const std::complex<double> q = (x.adjoint() * G * (S * x))(0);
        const Eigen::VectorXcd v = x.tail(n);
        const double vDv = (v.adjoint() * D * v)(0).real();
        CHECK(q.real() <= 1e-12 * nx);
        CHECK(std::abs(q.real() + vDv) <= 1e-10 * nx);
    }
}

TEST_CASE("undamped generator is gram-skew") {
    const auto sys = discretize(StarNetwork::undamped_default(), 12, 2.0, true);
    const Eigen::MatrixXd G(sys.gram);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 1000; ++t) {
        Eigen::VectorXcd x(sys.state_size());
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = {nd(rng), nd(rng)};
        const double nx = (x.adjoint() * G * x)(0).real();
        CHECK(std::abs((x.adjoint() * G * (sys.generator * x))(0).real()) <= 1e-12 * nx);
    }
}

TEST_CASE("one-DOF toy generator eigenvalues") {
    for (double delta : {0.5, 1.0, 3.0}) {
        const auto sys = build_generator(from_matrices(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
                                                       Eigen::MatrixXd::Constant(1, 1, delta)));
        Eigen::EigenSolver<Eigen::MatrixXd> es(sys.generator);
        const std::complex<double> disc = std::sqrt(std::complex<double>(delta * delta - 4.0));
        const std::complex<double> l1 = (-delta + disc) / 2.0, l2 = (-delta - disc) / 2.0;
        const auto ev = es.eigenvalues();
        const bool direct = std::abs(ev(0) - l1) < 1e-12 && std::abs(ev(1) - l2) < 1e-12;
        const bool swapped = std::abs(ev(0) - l2) < 1e-12 && std::abs(ev(1) - l1) < 1e-12;
        CHECK((direct || swapped));
    }
}

TEST_CASE("lowest undamped frequency converges at second order") {
    const double pi2 = std::numbers::pi / 2;
    const double e1 = lowest_frequency(8) - pi2, e2 = lowest_frequency(16) - pi2, e3 = lowest_frequency(32) - pi2;
    CHECK(e1 > 0.0);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("dense generator budget") {
    const auto sys = discretize(StarNetwork::default_network(0.5), 40, 2.0);
    CHECK_THROWS_AS(build_generator(sys, 100), NumericalError);
}

TEST_CASE("sparse generator application matches the dense generator") {
    const auto sys = discretize(StarNetwork::default_network(0.3), 20, 2.0, true);
    const GeneratorOperator op(sys);
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(sys.state_size(), -1.0, 2.0);
    CHECK((op.apply(x) - sys.generator * x).cwiseAbs().maxCoeff() < 1e-9 * (sys.generator * x).cwiseAbs().maxCoeff());
    CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(3)), NumericalError);
}

TEST_CASE("dof map") {
    const DofMap d{3, 4};
    CHECK(d.size() == 10);
    CHECK(d.global(2, 0) == 0);
    CHECK(d.global(1, 4) == -1);
    CHECK(d.global(1, 1) == 4);
}

TEST_CASE("tabulated profile outside its samples fails assembly") {
    const StarNetwork net(1.0, {{1.0, DampingProfile::table({{0.0, 0.0}, {0.5, 1.0}})}});
    CHECK_THROWS_AS(discretize(net, 8, 1.0), AssemblyError);
}
