#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "kvnet/network.hpp"

namespace kvnet {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Per-edge node coordinates from the vertex (x = 0) to the outer end (x = length).
struct Mesh {
    std::vector<std::vector<double>> nodes;  ///< nodes[e], e = 0..N
    std::vector<double> grading;             ///< grading[e]

    int edge_count() const { return static_cast<int>(nodes.size()); }
    int elements_per_edge() const { return static_cast<int>(nodes.front().size()) - 1; }
    double h_min() const;
    double h_max() const;
};

/// Edge 0 uniform; damped edges at length * (i/n)^grading.
Mesh build_mesh(const StarNetwork& network, int n_per_edge, double grading = 2.0);

/// Global numbering: the vertex is DOF 0, then the interior nodes of each edge in order.
/// Outer ends carry the Dirichlet condition and have no DOF.
struct DofMap {
    int edges = 0;
    int n_per_edge = 0;

    Eigen::Index size() const { return 1 + static_cast<Eigen::Index>(edges) * (n_per_edge - 1); }
    /// -1 for the eliminated outer node.
    Eigen::Index global(int edge, int node) const;
};

struct AssembledSystem {
    Eigen::Index n_u = 0;
    SparseMatrix K;  ///< sum_j int u' phi'
    SparseMatrix M;  ///< sum_j int u phi
    SparseMatrix D;  ///< sum_j int d_j u' phi'
    SparseMatrix gram;  ///< blockdiag(K, M)
    Mesh mesh;
    DofMap dofs;
    bool damped = false;
    /// Dense [0, I; -M^-1 K, -M^-1 D]; empty until build_generator.
    Eigen::MatrixXd generator;

    Eigen::Index state_size() const { return 2 * n_u; }
};

/// P1 assembly with 4-point Gauss quadrature of the damping on each element.
AssembledSystem assemble(const StarNetwork& network, const Mesh& mesh);

inline constexpr Eigen::Index kDenseBudget = 6000;

/// Fills the dense generator. NumericalError if 2 n_u exceeds `budget`.
AssembledSystem build_generator(AssembledSystem system, Eigen::Index budget = kDenseBudget);

/// System from raw matrices (no mesh); used for small hand-checkable toys.
AssembledSystem from_matrices(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M, const Eigen::MatrixXd& D);

/// Convenience: mesh, assemble, and (when within budget) the dense generator.
AssembledSystem discretize(const StarNetwork& network, int n_per_edge, double grading = 2.0,
                           bool dense_generator = false);

/// Sparse application of the generator: S x = (v, -M^-1 (K u + D v)).
class GeneratorOperator {
public:
    explicit GeneratorOperator(const AssembledSystem& system);
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

private:
    const AssembledSystem* sys_;
    Eigen::SimplicialLDLT<SparseMatrix> mass_;
};

}  // namespace kvnet
