#include "cyclecert/flowcore.hpp"

#include <cmath>
#include <deque>

#include "cyclecert/errors.hpp"

namespace cyclecert {

double guarded_asin(double z, int edge) {
    if (std::abs(z) <= 1.0) return std::asin(z);
    if (std::abs(z) <= 1.0 + kArcsinGuard) return std::asin(std::copysign(1.0, z));
    throw DomainError(edge, z);
}

// ---------------------------------------------------------------------------
// Laplacian
// ---------------------------------------------------------------------------

namespace {

bool connected(const Incidence& inc) {
    if (inc.n <= 1) return true;
    std::vector<std::vector<int>> adj(inc.n);
    for (const auto& e : inc.edges) {
        adj[e.source].push_back(e.sink);
        adj[e.sink].push_back(e.source);
    }
    std::vector<char> seen(inc.n, 0);
    std::vector<int> frontier{0};
    seen[0] = 1;
    int count = 1;
    while (!frontier.empty()) {
        const int u = frontier.back();
        frontier.pop_back();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                frontier.push_back(v);
            }
        }
    }
    return count == inc.n;
}

}  // namespace

LaplacianSolver::LaplacianSolver(const Incidence& inc) : n_(inc.n) {
    if (n_ <= 1) return;
    if (!connected(inc)) throw SolveError("grounded Laplacian is singular: graph is disconnected");

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(4 * inc.edges.size());
    for (int e = 0; e < inc.m(); ++e) {
        const int s = inc.edges[e].source - 1, t = inc.edges[e].sink - 1;
        const double w = inc.weight[e];
        if (s >= 0) entries.emplace_back(s, s, w);
        if (t >= 0) entries.emplace_back(t, t, w);
        if (s >= 0 && t >= 0) {
            entries.emplace_back(s, t, -w);
            entries.emplace_back(t, s, -w);
        }
    }
    Eigen::SparseMatrix<double> grounded(n_ - 1, n_ - 1);
    grounded.setFromTriplets(entries.begin(), entries.end());

    factor_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    factor_->compute(grounded);
    if (factor_->info() != Eigen::Success) throw SolveError("grounded Laplacian factorization failed");
}

Eigen::VectorXd LaplacianSolver::apply(const Eigen::VectorXd& p) const {
    if (p.size() != n_) throw ValidationError("injection length does not match bus count");
    if (std::abs(p.sum()) > 1e-9 * std::max(1.0, p.lpNorm<1>())) {
        throw ValidationError("injections do not sum to zero");
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_);
    if (n_ <= 1) return u;
    const Eigen::VectorXd reduced = factor_->solve(p.tail(n_ - 1));
    if (factor_->info() != Eigen::Success) throw SolveError("grounded Laplacian solve failed");
    u.tail(n_ - 1) = reduced;
    u.array() -= u.mean();
    return u;
}

Eigen::VectorXd laplacian_pinv_apply(const Incidence& inc, const Eigen::VectorXd& p) {
    return LaplacianSolver(inc).apply(p);
}

// ---------------------------------------------------------------------------
// Flow family
// ---------------------------------------------------------------------------

Eigen::VectorXd FlowParam::z(const Eigen::VectorXd& lambda) const {
    if (lambda.size() != q()) throw ValidationError("lambda length does not match the cycle count");
    if (q() == 0) return z0;
    return z0 + h * lambda;
}

FlowParam particular_flow(const Incidence& oriented, const CycleBasis& basis, const Eigen::VectorXd& p) {
    return particular_flow(oriented, basis, LaplacianSolver(oriented), p);
}

FlowParam particular_flow(const Incidence& oriented, const CycleBasis& basis, const LaplacianSolver& solver,
                          const Eigen::VectorXd& p) {
    if (basis.edge_count != oriented.m()) throw ValidationError("cycle basis does not match the incidence");
    const Eigen::VectorXd u = solver.apply(p);

    FlowParam fp;
    fp.weight = oriented.weight;
    fp.z0 = oriented.edge_differences(u);
    fp.f_hat = oriented.weight.cwiseProduct(fp.z0);

    const int m = oriented.m(), q = basis.q();
    std::vector<Eigen::Triplet<double>> c_entries, h_entries;
    for (int k = 0; k < q; ++k) {
        for (int e : basis.cycles[k].edges) {
            c_entries.emplace_back(e, k, 1.0);
            h_entries.emplace_back(e, k, 1.0 / oriented.weight[e]);
        }
    }
    fp.c.resize(m, q);
    fp.c.setFromTriplets(c_entries.begin(), c_entries.end());
    fp.h.resize(m, q);
    fp.h.setFromTriplets(h_entries.begin(), h_entries.end());

    fp.cycle_count = basis.cycle_counts();
    for (int e = 0; e < m; ++e) {
        if (fp.cycle_count[e] > 0) fp.cycle_edges.push_back(e);
    }
    fp.bridge_edges = basis.edges_with_role(EdgeRole::Bridge);
    fp.bridge_flows.resize(static_cast<Eigen::Index>(fp.bridge_edges.size()));
    for (std::size_t i = 0; i < fp.bridge_edges.size(); ++i) fp.bridge_flows[i] = fp.z0[fp.bridge_edges[i]];
    return fp;
}

Eigen::VectorXd eval_g(const FlowParam& fp, const Eigen::VectorXd& lambda) {
    const Eigen::VectorXd z = fp.z(lambda);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(fp.m());
    for (int e : fp.cycle_edges) delta[e] = guarded_asin(z[e], e);
    return fp.c.transpose() * delta;
}

Eigen::MatrixXd g_jacobian(const FlowParam& fp, const Eigen::VectorXd& lambda) {
    const Eigen::VectorXd z = fp.z(lambda);
    Eigen::VectorXd slope = Eigen::VectorXd::Zero(fp.m());
    for (int e : fp.cycle_edges) {
        const double s = 1.0 - z[e] * z[e];
        if (!(s > 0.0)) throw DomainError(e, z[e]);
        slope[e] = 1.0 / std::sqrt(s);
    }
    const Eigen::SparseMatrix<double> weighted = slope.asDiagonal() * fp.h;
    return Eigen::MatrixXd(fp.c.transpose() * weighted);
}

// ---------------------------------------------------------------------------
// Angle recovery
// ---------------------------------------------------------------------------

double power_flow_residual(const Incidence& inc, const Eigen::VectorXd& p, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd flows = inc.weight.cwiseProduct(inc.edge_differences(theta).array().sin().matrix());
    return (p - inc.node_sums(flows)).lpNorm<Eigen::Infinity>();
}

double max_branch_angle(const Incidence& inc, const Eigen::VectorXd& theta) {
    if (inc.m() == 0) return 0.0;
    return inc.edge_differences(theta).lpNorm<Eigen::Infinity>();
}

double algebraic_connectivity(const Incidence& inc) {
    if (inc.n < 2) return 0.0;
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(inc.n, inc.n);
    for (int e = 0; e < inc.m(); ++e) {
        const auto [s, t] = inc.edges[e];
        const double w = inc.weight[e];
        lap(s, s) += w;
        lap(t, t) += w;
        lap(s, t) -= w;
        lap(t, s) -= w;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SolveError("Laplacian eigendecomposition failed");
    return eig.eigenvalues()[1];
}

AngleSolution recover_theta(const FlowParam& fp, const CycleBasis& basis, const Incidence& oriented,
                            const Eigen::VectorXd& p, const Eigen::VectorXd& lambda_star,
                            const RecoveryTolerances& tol) {
    if (fp.q() > 0) {
        const double gmax = eval_g(fp, lambda_star).lpNorm<Eigen::Infinity>();
        if (gmax > tol.cycle) {
            throw ConsistencyError("lambda* is not a root of the cycle residual (|g| = " + std::to_string(gmax) + ")");
        }
    }

    const Eigen::VectorXd z = fp.z(lambda_star);
    Eigen::VectorXd delta(fp.m());
    for (int e = 0; e < fp.m(); ++e) delta[e] = guarded_asin(z[e], e);

    // Tree edges and bridges together span the whole graph.
    const int n = oriented.n;
    std::vector<std::vector<int>> spanning(n);
    for (int e = 0; e < oriented.m(); ++e) {
        if (basis.roles[e] == EdgeRole::Back) continue;
        spanning[oriented.edges[e].source].push_back(e);
        spanning[oriented.edges[e].sink].push_back(e);
    }
    AngleSolution sol;
    sol.theta = Eigen::VectorXd::Zero(n);
    std::vector<char> known(n, 0);
    std::deque<int> frontier;
    if (n > 0) {
        known[0] = 1;
        frontier.push_back(0);
    }
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop_front();
        for (int e : spanning[u]) {
            const auto [s, t] = oriented.edges[e];
            const int v = s == u ? t : s;
            if (known[v]) continue;
            // theta_s - theta_t = delta_e
            sol.theta[v] = s == u ? sol.theta[u] - delta[e] : sol.theta[u] + delta[e];
            known[v] = 1;
            frontier.push_back(v);
        }
    }
    for (int v = 0; v < n; ++v) {
        if (!known[v]) throw ConsistencyError("spanning forest does not reach bus index " + std::to_string(v));
    }

    const Eigen::VectorXd diffs = oriented.edge_differences(sol.theta);
    for (int e = 0; e < oriented.m(); ++e) {
        const double gap = std::abs(diffs[e] - delta[e]);
        if (gap > tol.consistency) {
            throw ConsistencyError("edge " + std::to_string(e) + " angle mismatch " + std::to_string(gap));
        }
    }
    sol.max_angle_diff = diffs.size() ? diffs.lpNorm<Eigen::Infinity>() : 0.0;
    sol.residual = power_flow_residual(oriented, p, sol.theta);
    if (sol.residual > tol.residual) {
        throw ConsistencyError("recovered angles leave residual " + std::to_string(sol.residual));
    }
    return sol;
}

}  // namespace cyclecert
