#include "cyclecert/refsolvers.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SparseLU>
#include <spdlog/spdlog.h>

#include "cyclecert/errors.hpp"
#include "cyclecert/flowcore.hpp"

namespace cyclecert {

namespace {

Eigen::VectorXd mismatch(const Incidence& inc, const Eigen::VectorXd& p, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd flows = inc.weight.cwiseProduct(inc.edge_differences(theta).array().sin().matrix());
    return p - inc.node_sums(flows);
}

// A D diag(cos(A^T theta)) A^T without the reference row and column.
Eigen::SparseMatrix<double> reduced_jacobian(const Incidence& inc, const Eigen::VectorXd& theta) {
    const int n = inc.n;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(4 * inc.edges.size());
    for (int e = 0; e < inc.m(); ++e) {
        const int s = inc.edges[e].source, t = inc.edges[e].sink;
        const double k = inc.weight[e] * std::cos(theta[s] - theta[t]);
        if (s > 0) entries.emplace_back(s - 1, s - 1, k);
        if (t > 0) entries.emplace_back(t - 1, t - 1, k);
        if (s > 0 && t > 0) {
            entries.emplace_back(s - 1, t - 1, -k);
            entries.emplace_back(t - 1, s - 1, -k);
        }
    }
    Eigen::SparseMatrix<double> jac(n - 1, n - 1);
    jac.setFromTriplets(entries.begin(), entries.end());
    jac.makeCompressed();
    return jac;
}

}  // namespace

NRResult nr_solve(const Incidence& inc, const Eigen::VectorXd& p, const Eigen::VectorXd& theta0,
                  const NROptions& opts) {
    const int n = inc.n;
    if (p.size() != n) throw ValidationError("injection length does not match bus count");
    if (theta0.size() != 0 && theta0.size() != n) throw ValidationError("initial angles do not match bus count");

    NRResult res;
    Eigen::VectorXd theta = theta0.size() ? theta0 : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = mismatch(inc, p, theta);
    double rnorm = r.lpNorm<Eigen::Infinity>();

    while (rnorm > opts.tol && res.iterations < opts.max_iterations && n > 1) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(reduced_jacobian(inc, theta));
        if (lu.info() != Eigen::Success) {
            res.message = "singular Jacobian";
            break;
        }
        const Eigen::VectorXd step = lu.solve(r.tail(n - 1));
        if (lu.info() != Eigen::Success || !step.allFinite()) {
            res.message = "singular Jacobian";
            break;
        }
        ++res.iterations;

        const double r2 = r.norm();
        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h, alpha *= 0.5) {
            Eigen::VectorXd cand = theta;
            cand.tail(n - 1) += alpha * step;
            const Eigen::VectorXd rc = mismatch(inc, p, cand);
            if (rc.norm() <= (1.0 - 1e-4 * alpha) * r2) {
                theta = std::move(cand);
                r = rc;
                accepted = true;
                break;
            }
        }
        rnorm = r.lpNorm<Eigen::Infinity>();
        if (!accepted) {
            res.message = "line search failed";
            break;
        }
    }

    res.final_residual = rnorm;
    res.max_angle_diff = max_branch_angle(inc, theta);
    res.converged = rnorm <= opts.tol;
    if (res.converged) {
        res.theta = theta;
        res.success = res.max_angle_diff <= std::numbers::pi / 2;
        if (!res.success) res.message = "converged outside the pi/2 angle band";
    } else if (res.message.empty()) {
        res.message = "iteration limit reached";
    }
    spdlog::debug("nr: {} after {} iterations, residual {:.3e}", res.converged ? "converged" : "failed",
                  res.iterations, rnorm);
    return res;
}

NRResult nr_solve(const Network& net, const Eigen::VectorXd& theta0, const NROptions& opts) {
    return nr_solve(build_incidence(net), net.injection, theta0, opts);
}

BaselineDiagnostics diagnostics(const Network& net) {
    const Incidence inc = build_incidence(net);
    BaselineDiagnostics d;
    const Eigen::VectorXd z = inc.edge_differences(laplacian_pinv_apply(inc, net.injection));
    d.z_inf_norm = z.size() ? z.lpNorm<Eigen::Infinity>() : 0.0;
    d.lambda2 = algebraic_connectivity(inc);
    return d;
}

}  // namespace cyclecert
