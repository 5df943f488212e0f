#pragma once

#include <string>
#include <vector>

#include "cyclecert/certify.hpp"
#include "cyclecert/network.hpp"
#include "cyclecert/refsolvers.hpp"

namespace cyclecert {

struct SweepOptions {
    double y_max = 20.0;
    double tol = 1e-3;       // relative bracket width on y
    int coarse_points = 20;  // uniform scan of (0, y_max] before bisection
};

struct SweepSample {
    double y = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    Reason reason = Reason::None;
    bool theta_validated = false;  // recovered angles passed the residual check
    bool nr_success = false;
};

struct SweepResult {
    double y_cert = 0.0;
    double y_nr = 0.0;
    double eta = 0.0;
    double tolerance = 0.0;
    double y_max = 0.0;
    std::vector<SweepSample> trace;  // sorted by y
    std::vector<std::string> warnings;
    int sufficiency_violations = 0;  // Certified with no solution found by either method
};

/// Margins y_cert and y_NR for P(y) = y * P0 with P0 the certifier's nominal injection.
/// The certifier should have recover_solution enabled so certified samples are validated.
SweepResult stress_sweep(const Certifier& certifier, const SweepOptions& opts = {});
SweepResult stress_sweep(const Network& net, CertifyOptions copts = {}, const SweepOptions& opts = {});

}  // namespace cyclecert
