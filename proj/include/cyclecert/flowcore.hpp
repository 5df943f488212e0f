#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cyclecert/topology.hpp"

namespace cyclecert {

/// Values within this distance outside [-1, 1] are clamped before arcsin; farther is a DomainError.
inline constexpr double kArcsinGuard = 1e-12;

/// arcsin with the clamping guard. `edge` only labels the error.
double guarded_asin(double z, int edge = -1);

/// Factorization of the grounded Laplacian L = A D A^T (reference node 0 removed).
/// Immutable after construction; `apply` is safe to call concurrently.
class LaplacianSolver {
  public:
    explicit LaplacianSolver(const Incidence& inc);

    /// u = L^+ p for p orthogonal to the all-ones vector.
    Eigen::VectorXd apply(const Eigen::VectorXd& p) const;

    int size() const { return n_; }

  private:
    int n_;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
};

/// Convenience one-shot form of LaplacianSolver::apply.
Eigen::VectorXd laplacian_pinv_apply(const Incidence& inc, const Eigen::VectorXd& p);

/// Affine flow family z(lambda) = z0 + H lambda in the reoriented edge frame.
struct FlowParam {
    Eigen::VectorXd f_hat;  // particular flow D A^T L^+ P, p.u.
    Eigen::VectorXd z0;     // D^{-1} f_hat
    Eigen::SparseMatrix<double> c;  // m x q cycle basis over {0, 1}
    Eigen::SparseMatrix<double> h;  // D^{-1} C
    Eigen::VectorXd weight;         // diag(D)
    std::vector<int> bridge_edges;
    Eigen::VectorXd bridge_flows;   // z0 restricted to bridge_edges
    std::vector<int> cycle_edges;   // edges carried by at least one basis cycle
    std::vector<int> cycle_count;   // c_e per edge

    int m() const { return static_cast<int>(z0.size()); }
    int q() const { return static_cast<int>(c.cols()); }

    Eigen::VectorXd z(const Eigen::VectorXd& lambda) const;
};

/// `oriented` must be the incidence in the basis' reoriented frame (see `reorient`).
FlowParam particular_flow(const Incidence& oriented, const CycleBasis& basis, const Eigen::VectorXd& p);
FlowParam particular_flow(const Incidence& oriented, const CycleBasis& basis, const LaplacianSolver& solver,
                          const Eigen::VectorXd& p);

/// g(lambda) = C^T arcsin(z0 + H lambda), radians per basis cycle. Throws DomainError.
Eigen::VectorXd eval_g(const FlowParam& fp, const Eigen::VectorXd& lambda);

/// dg/dlambda = C^T diag(1 / sqrt(1 - z^2)) H; entrywise nonnegative. Requires |z| < 1 on cycle edges.
Eigen::MatrixXd g_jacobian(const FlowParam& fp, const Eigen::VectorXd& lambda);

struct AngleSolution {
    Eigen::VectorXd theta;  // radians, theta[root] = 0
    double max_angle_diff = 0.0;
    double residual = 0.0;  // ||P - A D sin(A^T theta)||_inf
};

struct RecoveryTolerances {
    double cycle = 1e-8;        // ||g(lambda*)||_inf precondition
    double consistency = 1e-7;  // |delta_e - (theta_s - theta_t)| on every edge
    double residual = 1e-7;
};

/// Angles from a root of g: walks the DFS forest plus bridges from node 0 and checks
/// every edge and the nodal balance. Throws ConsistencyError when lambda* is not a root.
AngleSolution recover_theta(const FlowParam& fp, const CycleBasis& basis, const Incidence& oriented,
                            const Eigen::VectorXd& p, const Eigen::VectorXd& lambda_star,
                            const RecoveryTolerances& tol = {});

/// ||P - A D sin(A^T theta)||_inf, orientation independent.
double power_flow_residual(const Incidence& inc, const Eigen::VectorXd& p, const Eigen::VectorXd& theta);
double max_branch_angle(const Incidence& inc, const Eigen::VectorXd& theta);

/// Second-smallest eigenvalue of L = A D A^T (dense symmetric eigensolver).
double algebraic_connectivity(const Incidence& inc);

}  // namespace cyclecert
