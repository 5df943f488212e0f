#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "cyclecert/certify.hpp"
#include "cyclecert/errors.hpp"
#include "cyclecert/netparse.hpp"
#include "cyclecert/refsolvers.hpp"
#include "oracles.hpp"

using namespace cyclecert;

namespace {

const std::string kData = CYCLECERT_DATA_DIR;

Network two_bus(double p) {
    return oracle::make_network(2, {{0, 1}}, Eigen::VectorXd::Constant(1, 5.0), Eigen::Vector2d(p, -p));
}

}  // namespace

TEST_CASE("zero injection converges immediately") {
    const NRResult res = nr_solve(two_bus(0.0));
    CHECK(res.converged);
    CHECK(res.success);
    CHECK(res.iterations == 0);
    CHECK(res.theta.isZero(0.0));
}

TEST_CASE("2-bus closed form") {
    const NRResult res = nr_solve(two_bus(1.0));
    REQUIRE(res.success);
    CHECK(res.theta[0] - res.theta[1] == doctest::Approx(std::asin(0.2)).epsilon(1e-9));
    CHECK(res.final_residual <= 1e-8);
}

TEST_CASE("2-bus beyond the sine bound fails") {
    const NRResult res = nr_solve(two_bus(6.0));
    CHECK_FALSE(res.converged);
    CHECK_FALSE(res.success);
    CHECK(res.theta.size() == 0);
    CHECK_FALSE(res.message.empty());
}

TEST_CASE("converged results satisfy the residual contract") {
    for (const char* name : {"/case9.m", "/case14.m"}) {
        const Network net = losslessify(read_case_file(kData + name));
        const NRResult res = nr_solve(net);
        REQUIRE(res.success);
        const Incidence inc = build_incidence(net);
        CHECK(oracle::explicit_residual(net.n(), inc.edges, inc.weight, net.injection, res.theta) <= 1e-8);
        CHECK(res.max_angle_diff == doctest::Approx(oracle::explicit_max_angle(inc.edges, res.theta)));
    }
    oracle::Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = oracle::uniform_int(rng, 2, 12);
        const auto edges = oracle::random_connected_graph(n, 0.3, rng);
        const int m = static_cast<int>(edges.size());
        const Eigen::VectorXd w = oracle::random_weights(m, rng);
        const Network net = oracle::make_network(n, edges, w, oracle::uniform(rng, 0.1, 3.0) * oracle::random_balanced(n, rng));
        const NRResult res = nr_solve(net);
        if (!res.converged) continue;
        CHECK(oracle::explicit_residual(n, build_incidence(net).edges, w, net.injection, res.theta) <= 1e-8);
        CHECK(res.success == (res.max_angle_diff <= std::numbers::pi / 2));
    }
}

TEST_CASE("NR agrees with the certificate's recovered angles") {
    oracle::Rng rng(42);
    int compared = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const int n = oracle::uniform_int(rng, 3, 12);
        const auto edges = oracle::random_connected_graph(n, 0.4, rng);
        const int m = static_cast<int>(edges.size());
        const Network net = oracle::make_network(n, edges, oracle::random_weights(m, rng),
                                                 oracle::uniform(rng, 0.2, 2.0) * oracle::random_balanced(n, rng));
        CertifyOptions opts;
        opts.recover_solution = true;
        const Certificate cert = certify(net, opts);
        const NRResult res = nr_solve(net);
        if (!cert.theta || !res.success) continue;
        CHECK((cert.theta->theta - res.theta).lpNorm<Eigen::Infinity>() <= 1e-6);
        ++compared;
    }
    CHECK(compared > 10);
}

TEST_CASE("diagnostics") {
    CHECK(diagnostics(two_bus(0.0)).z_inf_norm == 0.0);
    CHECK(diagnostics(two_bus(1.0)).lambda2 == doctest::Approx(10.0));
    CHECK(diagnostics(two_bus(1.0)).z_inf_norm == doctest::Approx(0.2));
    for (const char* name : {"/case9.m", "/case14.m"}) {
        const Network net = losslessify(read_case_file(kData + name));
        const BaselineDiagnostics d = diagnostics(net);
        const Incidence inc = build_incidence(net);
        const Eigen::VectorXd ev = oracle::jacobi_eigenvalues(oracle::laplacian(net.n(), inc.edges, inc.weight));
        CHECK(std::abs(d.lambda2 - ev[1]) <= 1e-9);
        const Eigen::VectorXd u = oracle::svd_pinv(oracle::laplacian(net.n(), inc.edges, inc.weight)) * net.injection;
        const Eigen::VectorXd z = oracle::incidence_matrix(net.n(), inc.edges).transpose() * u;
        CHECK(std::abs(d.z_inf_norm - z.lpNorm<Eigen::Infinity>()) <= 1e-9);
    }
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(nr_solve(two_bus(1.0), Eigen::VectorXd::Zero(3)), ValidationError);
}
