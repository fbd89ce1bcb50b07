#include "kvnet/discretization.hpp"

#include <array>
#include <limits>
#include <cmath>
#include <sstream>

#include "kvnet/error.hpp"

namespace kvnet {

namespace {

// 4-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 4> kGaussX = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                           0.8611363115940526};
constexpr std::array<double, 4> kGaussW = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                           0.3478548451374538};

double element_damping(const DampingProfile& p, double x0, double x1) {
    const double mid = 0.5 * (x0 + x1);
    const double half = 0.5 * (x1 - x0);
    double s = 0.0;
    for (std::size_t q = 0; q < kGaussX.size(); ++q) s += kGaussW[q] * p.value(mid + half * kGaussX[q]);
    return s * half;
}

}  // namespace

double Mesh::h_min() const {
    double h = std::numeric_limits<double>::infinity();
    for (const auto& n : nodes)
        for (std::size_t i = 1; i < n.size(); ++i) h = std::min(h, n[i] - n[i - 1]);
    return h;
}

double Mesh::h_max() const {
    double h = 0.0;
    for (const auto& n : nodes)
        for (std::size_t i = 1; i < n.size(); ++i) h = std::max(h, n[i] - n[i - 1]);
    return h;
}

Mesh build_mesh(const StarNetwork& network, int n_per_edge, double grading) {
    if (n_per_edge < 2) throw ConfigError("n_per_edge must be at least 2");
    if (!(grading >= 1.0)) throw ConfigError("grading must be >= 1");
    Mesh mesh;
    for (int e = 0; e < network.edge_count(); ++e) {
        const double g = e == 0 ? 1.0 : grading;
        const double len = network.length(e);
        std::vector<double> x(static_cast<std::size_t>(n_per_edge) + 1);
        for (int i = 0; i <= n_per_edge; ++i) x[i] = len * std::pow(static_cast<double>(i) / n_per_edge, g);
        x.back() = len;
        mesh.nodes.push_back(std::move(x));
        mesh.grading.push_back(g);
    }
    return mesh;
}

Eigen::Index DofMap::global(int edge, int node) const {
    if (node == 0) return 0;
    if (node == n_per_edge) return -1;
    return 1 + static_cast<Eigen::Index>(edge) * (n_per_edge - 1) + (node - 1);
}

AssembledSystem assemble(const StarNetwork& network, const Mesh& mesh) {
    if (mesh.edge_count() != network.edge_count())
        throw AssemblyError("mesh edge count does not match the network");
    AssembledSystem sys;
    sys.mesh = mesh;
    sys.dofs = DofMap{mesh.edge_count(), mesh.elements_per_edge()};
    sys.n_u = sys.dofs.size();
    sys.damped = !network.undamped();

    std::vector<Eigen::Triplet<double>> tk, tm, td;
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const auto& x = mesh.nodes[e];
        if (static_cast<int>(x.size()) - 1 != sys.dofs.n_per_edge)
            throw AssemblyError("all edges must carry the same number of elements");
        if (std::abs(x.back() - network.length(e)) > 1e-12 * network.length(e))
            throw AssemblyError("mesh does not span the edge length");
        const DampingProfile& prof = network.profile(e);
        for (int i = 0; i + 1 < static_cast<int>(x.size()); ++i) {
            const double h = x[i + 1] - x[i];
            if (!(h > 0.0)) throw AssemblyError("mesh coordinates must be strictly increasing");
            double dint = 0.0;
            if (!prof.is_zero()) {
                try {
                    dint = element_damping(prof, x[i], x[i + 1]);
                } catch (const DomainError& err) {
                    std::ostringstream os;
                    os << "damping quadrature failed on edge " << e << " element [" << x[i] << ", " << x[i + 1]
                       << "]: " << err.what();
                    throw AssemblyError(os.str());
                }
            }
            const Eigen::Index g[2] = {sys.dofs.global(e, i), sys.dofs.global(e, i + 1)};
            const double sgn[2][2] = {{1.0, -1.0}, {-1.0, 1.0}};
            const double mass[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
            for (int a = 0; a < 2; ++a) {
                if (g[a] < 0) continue;
                for (int b = 0; b < 2; ++b) {
                    if (g[b] < 0) continue;
                    tk.emplace_back(g[a], g[b], sgn[a][b] / h);
                    tm.emplace_back(g[a], g[b], mass[a][b]);
                    if (dint != 0.0) td.emplace_back(g[a], g[b], sgn[a][b] * dint / (h * h));
                }
            }
        }
    }
    const Eigen::Index n = sys.n_u;
    sys.K.resize(n, n);
    sys.M.resize(n, n);
    sys.D.resize(n, n);
    sys.K.setFromTriplets(tk.begin(), tk.end());
    sys.M.setFromTriplets(tm.begin(), tm.end());
    sys.D.setFromTriplets(td.begin(), td.end());

    std::vector<Eigen::Triplet<double>> tg;
    for (int k = 0; k < sys.K.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sys.K, k); it; ++it) tg.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < sys.M.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sys.M, k); it; ++it)
            tg.emplace_back(it.row() + n, it.col() + n, it.value());
    sys.gram.resize(2 * n, 2 * n);
    sys.gram.setFromTriplets(tg.begin(), tg.end());
    return sys;
}

AssembledSystem build_generator(AssembledSystem system, Eigen::Index budget) {
    const Eigen::Index n = system.n_u;
    if (2 * n > budget) {
        std::ostringstream os;
        os << "dense generator of size " << 2 * n << " exceeds the budget " << budget;
        throw NumericalError(os.str());
    }
    const Eigen::MatrixXd M = Eigen::MatrixXd(system.M);
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw AssemblyError("mass matrix is singular");
    system.generator.setZero(2 * n, 2 * n);
    system.generator.topRightCorner(n, n).setIdentity();
    system.generator.bottomLeftCorner(n, n) = -llt.solve(Eigen::MatrixXd(system.K));
    system.generator.bottomRightCorner(n, n) = -llt.solve(Eigen::MatrixXd(system.D));
    return system;
}

AssembledSystem from_matrices(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M, const Eigen::MatrixXd& D) {
    const Eigen::Index n = K.rows();
    if (K.cols() != n || M.rows() != n || M.cols() != n || D.rows() != n || D.cols() != n)
        throw AssemblyError("K, M, D must be square and of equal size");
    AssembledSystem sys;
    sys.n_u = n;
    sys.K = K.sparseView();
    sys.M = M.sparseView();
    sys.D = D.sparseView(0.0, 0.0);
    sys.D.prune(0.0);
    sys.damped = sys.D.nonZeros() > 0;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    g.topLeftCorner(n, n) = K;
    g.bottomRightCorner(n, n) = M;
    sys.gram = g.sparseView();
    return sys;
}

AssembledSystem discretize(const StarNetwork& network, int n_per_edge, double grading, bool dense_generator) {
    auto sys = assemble(network, build_mesh(network, n_per_edge, grading));
    if (dense_generator) sys = build_generator(std::move(sys));
    return sys;
}

GeneratorOperator::GeneratorOperator(const AssembledSystem& system) : sys_(&system), mass_(system.M) {
    if (mass_.info() != Eigen::Success) throw AssemblyError("mass matrix is singular");
}

Eigen::VectorXd GeneratorOperator::apply(const Eigen::VectorXd& x) const {
    const Eigen::Index n = sys_->n_u;
    if (x.size() != 2 * n) throw NumericalError("state size does not match the system");
    Eigen::VectorXd y(2 * n);
    y.head(n) = x.tail(n);
    const Eigen::VectorXd f = sys_->K * x.head(n) + sys_->D * x.tail(n);
    y.tail(n) = -mass_.solve(f);
    return y;
}

}  // namespace kvnet
