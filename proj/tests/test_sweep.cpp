#include <doctest.h>

#include <cmath>
#include <string>

#include "cyclecert/errors.hpp"
#include "cyclecert/netparse.hpp"
#include "cyclecert/report.hpp"
#include "cyclecert/sweep.hpp"
#include "oracles.hpp"

using namespace cyclecert;

namespace {

const std::string kData = CYCLECERT_DATA_DIR;

void check_result_invariants(const SweepResult& r) {
    CHECK(r.y_cert <= r.y_nr * (1.0 + r.tolerance));
    CHECK(r.eta >= 0.0);
    CHECK(r.eta <= 1.0 + r.tolerance);
    CHECK(r.sufficiency_violations == 0);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i - 1].y < r.trace[i].y);
    for (const auto& s : r.trace) {
        if (s.verdict == Verdict::Certified) CHECK((s.theta_validated || s.nr_success));
    }
}

}  // namespace

TEST_CASE("2-bus closed-form boundary") {
    const Network net = oracle::make_network(2, {{0, 1}}, Eigen::VectorXd::Constant(1, 5.0), Eigen::Vector2d(1.0, -1.0));
    const SweepResult r = stress_sweep(net);
    CHECK(std::abs(r.y_nr - 5.0) <= 5.0 * 1e-3);
    CHECK(std::abs(r.y_cert - 5.0) <= 5.0 * 1e-3);
    CHECK(r.eta == doctest::Approx(1.0).epsilon(1e-3));
    check_result_invariants(r);
}

TEST_CASE("IEEE 9 and 14: certified margin within 1% of the NR margin") {
    for (const char* name : {"/case9.m", "/case14.m"}) {
        const SweepResult r = stress_sweep(losslessify(read_case_file(kData + name)));
        CHECK(r.eta >= 0.99);
        CHECK(r.warnings.empty());
        check_result_invariants(r);
    }
}

TEST_CASE("bisection brackets the verdict flip") {
    const Network net = losslessify(read_case_file(kData + "/case14.m"));
    CertifyOptions copts;
    copts.recover_solution = true;
    const Certifier ctx(net, copts);
    const SweepResult r = stress_sweep(ctx);
    CHECK(ctx.certify((r.y_cert * (1.0 - r.tolerance)) * net.injection).certified());
    CHECK_FALSE(ctx.certify((r.y_cert * (1.0 + r.tolerance)) * net.injection).certified());
    CHECK(nr_solve(ctx.incidence(), (r.y_nr * (1.0 - r.tolerance)) * net.injection).success);
    CHECK_FALSE(nr_solve(ctx.incidence(), (r.y_nr * (1.0 + r.tolerance)) * net.injection).success);
}

TEST_CASE("margins saturate at y_max") {
    const Network net = oracle::make_network(2, {{0, 1}}, Eigen::VectorXd::Constant(1, 5.0), Eigen::Vector2d(1.0, -1.0));
    SweepOptions opts;
    opts.y_max = 2.0;
    const SweepResult r = stress_sweep(net, {}, opts);
    CHECK(r.y_cert == 2.0);
    CHECK(r.y_nr == 2.0);
    CHECK(r.eta == 1.0);
}

TEST_CASE("random meshed networks respect the sufficiency inequality") {
    oracle::Rng rng(51);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = oracle::uniform_int(rng, 3, 9);
        const auto edges = oracle::random_connected_graph(n, 0.4, rng);
        const Network net = oracle::make_network(n, edges, oracle::random_weights(static_cast<int>(edges.size()), rng),
                                                 oracle::random_balanced(n, rng));
        check_result_invariants(stress_sweep(net));
    }
}

TEST_CASE("errors") {
    const Network zero =
        oracle::make_network(2, {{0, 1}}, Eigen::VectorXd::Constant(1, 5.0), Eigen::Vector2d(0.0, 0.0));
    CHECK_THROWS_AS(stress_sweep(zero), ValidationError);
    const Network net = oracle::make_network(2, {{0, 1}}, Eigen::VectorXd::Constant(1, 5.0), Eigen::Vector2d(1.0, -1.0));
    SweepOptions bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(stress_sweep(net, {}, bad), ValidationError);
}

TEST_CASE("CSV row layout") {
    SweepResult r;
    r.y_cert = 7.5;
    r.y_nr = 7.5;
    r.eta = 1.0;
    CHECK(sweep_csv_header() == "case,yCert,yNR,eta,basisPolicy,boxPolicy,wallTime");
    CHECK(sweep_csv_row("case9", r, BasisSearch::Coupling, BoxPolicy::Auto, "") ==
          "case9,7.500000,7.500000,1.000000,coupling,auto,");
}
