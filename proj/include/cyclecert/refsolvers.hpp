#pragma once

#include <string>

#include <Eigen/Dense>

#include "cyclecert/network.hpp"
#include "cyclecert/topology.hpp"

namespace cyclecert {

struct NROptions {
    double tol = 1e-8;  // ||r||_inf
    int max_iterations = 50;
    int max_halvings = 20;
};

struct NRResult {
    bool converged = false;  // residual below tolerance
    bool success = false;    // converged and every branch angle within pi/2
    Eigen::VectorXd theta;   // radians, theta[0] pinned; empty unless converged
    int iterations = 0;
    double final_residual = 0.0;
    double max_angle_diff = 0.0;
    std::string message;
};

/// Damped Newton-Raphson on r(theta) = P - A D sin(A^T theta) with bus index 0 as reference.
/// An empty theta0 means flat start.
NRResult nr_solve(const Incidence& inc, const Eigen::VectorXd& p, const Eigen::VectorXd& theta0 = {},
                  const NROptions& opts = {});
NRResult nr_solve(const Network& net, const Eigen::VectorXd& theta0 = {}, const NROptions& opts = {});

struct BaselineDiagnostics {
    double z_inf_norm = 0.0;  // ||D^{-1} A^T L^+ P||_inf
    double lambda2 = 0.0;
};

BaselineDiagnostics diagnostics(const Network& net);

}  // namespace cyclecert
