#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>

#include "cyclecert/errors.hpp"
#include "cyclecert/netparse.hpp"
#include "cyclecert/topology.hpp"
#include "oracles.hpp"

using namespace cyclecert;

namespace {

const std::string kData = CYCLECERT_DATA_DIR;

// Four-node example numbering: e1 2-1, e2 2-4, e3 3-2, e4 1-4, e5 3-4 (0-based nodes).
Incidence fig1() {
    return Incidence::from_edges(4, {{1, 0}, {1, 3}, {2, 1}, {0, 3}, {2, 3}}, Eigen::VectorXd::Ones(5));
}

Incidence load(const char* name) { return build_incidence(losslessify(read_case_file(kData + name))); }

void check_basis_invariants(const Incidence& inc, const BridgeDecomposition& decomp, const CycleBasis& basis) {
    const Eigen::MatrixXi c = basis.matrix();
    REQUIRE(c.rows() == inc.m());
    CHECK(basis.q() == inc.m() - inc.n + 1);

    const Eigen::MatrixXi ac = reorient(inc, basis).a_matrix() * c;
    CHECK(ac.isZero());
    CHECK(((c.array() == 0) || (c.array() == 1)).all());

    for (int k = 0; k < basis.q(); ++k) {
        int backs = 0;
        for (int e = 0; e < inc.m(); ++e) backs += c(e, k) && basis.roles[e] == EdgeRole::Back;
        CHECK(backs == 1);
        CHECK(basis.roles[basis.cycles[k].back_edge] == EdgeRole::Back);
    }
    for (int e = 0; e < inc.m(); ++e) {
        CHECK((basis.roles[e] == EdgeRole::Bridge) == static_cast<bool>(decomp.is_bridge[e]));
        CHECK((basis.orientation[e] == 1 || basis.orientation[e] == -1));
        const bool listed = std::count(basis.reoriented_edges.begin(), basis.reoriented_edges.end(), e) > 0;
        CHECK(listed == (basis.orientation[e] == -1));
    }

    if (basis.q() > 0) {
        const Eigen::MatrixXd cd = c.cast<double>();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(cd);
        CHECK(lu.rank() == basis.q());
        const Eigen::MatrixXd a = reorient(inc, basis).a_matrix().cast<double>();
        CHECK((oracle::column_projector(cd) - oracle::null_projector(a)).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

}  // namespace

TEST_CASE("2-bus incidence") {
    const Incidence inc = Incidence::from_edges(2, {{0, 1}}, Eigen::VectorXd::Constant(1, 5.0));
    Eigen::MatrixXi expect(2, 1);
    expect << 1, -1;
    CHECK(inc.a_matrix() == expect);
    CHECK(inc.weight[0] == 5.0);
    CHECK_THROWS_AS(Incidence::from_edges(2, {{0, 0}}, Eigen::VectorXd::Ones(1)), ValidationError);
    CHECK_THROWS_AS(Incidence::from_edges(2, {{0, 1}}, Eigen::VectorXd::Zero(1)), ValidationError);
}

TEST_CASE("four-node incidence keeps the drawn orientation") {
    const Incidence inc = fig1();
    Eigen::MatrixXi expect(4, 5);
    expect << -1, 0, 0, 1, 0,  //
        1, 1, -1, 0, 0,        //
        0, 0, 1, 0, 1,         //
        0, -1, 0, -1, -1;
    CHECK(inc.a_matrix() == expect);
    CHECK(inc.a_matrix().colwise().sum().cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("four-node cycle basis from root 1") {
    const Incidence inc = fig1();
    const BridgeDecomposition decomp = find_bridges(inc);
    CHECK(decomp.bridges.empty());
    REQUIRE(decomp.components.size() == 1);
    CHECK(decomp.components[0].edges.size() == 5);

    const CycleBasis basis = dfs_cycle_basis(decomp, inc, {{0}, NeighborOrder::Index});
    Eigen::MatrixXi expect(5, 2);
    expect << 1, 0,  //
        0, 1,        //
        1, 1,        //
        1, 0,        //
        1, 1;
    CHECK(basis.matrix() == expect);
    CHECK(basis.cycles[0].back_edge == 3);
    CHECK(basis.cycles[1].back_edge == 1);
    CHECK(basis.reoriented_edges == std::vector<int>{4});
    check_basis_invariants(inc, decomp, basis);
}

TEST_CASE("IEEE 14-bus: one bridge (7,8), q = 7") {
    const Network net = losslessify(read_case_file(kData + "/case14.m"));
    const Incidence inc = build_incidence(net);
    CHECK(inc.n == 14);
    CHECK(inc.m() == 20);
    const BridgeDecomposition decomp = find_bridges(inc);
    REQUIRE(decomp.bridges.size() == 1);
    const Edge bridge = inc.edges[decomp.bridges[0]];
    CHECK(net.bus_ids[bridge.source] == 7);
    CHECK(net.bus_ids[bridge.sink] == 8);
    CHECK(decomp.cyclic_component_count() == 1);

    for (BasisSearch s : {BasisSearch::None, BasisSearch::Roots, BasisSearch::Coupling}) {
        const CycleBasis basis = select_cycle_basis(decomp, inc, s);
        CHECK(basis.q() == 7);
        check_basis_invariants(inc, decomp, basis);
    }
}

TEST_CASE("IEEE 9-bus: three radial generator branches") {
    const Network net = losslessify(read_case_file(kData + "/case9.m"));
    const Incidence inc = build_incidence(net);
    const BridgeDecomposition decomp = find_bridges(inc);
    std::set<std::pair<int, int>> got;
    for (int e : decomp.bridges) got.insert({net.bus_ids[inc.edges[e].source], net.bus_ids[inc.edges[e].sink]});
    CHECK(got == std::set<std::pair<int, int>>{{1, 4}, {2, 8}, {3, 6}});
    CHECK(dfs_cycle_basis(decomp, inc).q() == 1);
}

TEST_CASE("trees: every edge is a bridge and q = 0") {
    oracle::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = oracle::uniform_int(rng, 2, 10);
        const auto edges = oracle::random_tree(n, rng);
        const Incidence inc = Incidence::from_edges(n, edges, Eigen::VectorXd::Ones(n - 1));
        const BridgeDecomposition decomp = find_bridges(inc);
        CHECK(static_cast<int>(decomp.bridges.size()) == n - 1);
        CHECK(decomp.cyclic_component_count() == 0);
        CHECK(static_cast<int>(decomp.components.size()) == n);
        const CycleBasis basis = dfs_cycle_basis(decomp, inc);
        CHECK(basis.q() == 0);
        CHECK(basis.matrix().rows() == n - 1);
        CHECK(basis.matrix().cols() == 0);
    }
}

TEST_CASE("bridges agree with brute-force edge removal") {
    oracle::Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = oracle::uniform_int(rng, 2, 8);
        const auto edges = oracle::random_connected_graph(n, oracle::uniform(rng, 0.0, 0.5), rng);
        const Incidence inc = Incidence::from_edges(n, edges, Eigen::VectorXd::Ones(static_cast<int>(edges.size())));
        CHECK(find_bridges(inc).bridges == oracle::brute_force_bridges(n, edges));
    }
}

TEST_CASE("decomposition partitions the edges") {
    oracle::Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = oracle::uniform_int(rng, 2, 12);
        const auto edges = oracle::random_connected_graph(n, oracle::uniform(rng, 0.0, 0.4), rng);
        const int m = static_cast<int>(edges.size());
        const BridgeDecomposition decomp = find_bridges(Incidence::from_edges(n, edges, Eigen::VectorXd::Ones(m)));
        std::vector<int> seen(m, 0);
        for (int e : decomp.bridges) ++seen[e];
        std::vector<int> node_seen(n, 0);
        for (std::size_t c = 0; c < decomp.components.size(); ++c) {
            for (int e : decomp.components[c].edges) ++seen[e];
            for (int v : decomp.components[c].nodes) {
                ++node_seen[v];
                CHECK(decomp.component_of_node[v] == static_cast<int>(c));
            }
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
        CHECK(std::all_of(node_seen.begin(), node_seen.end(), [](int s) { return s == 1; }));
        for (std::size_t c = 1; c < decomp.components.size(); ++c) {
            CHECK(decomp.components[c - 1].nodes.front() < decomp.components[c].nodes.front());
        }
    }
}

TEST_CASE("cycle basis invariants on random graphs, every search policy") {
    oracle::Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = oracle::uniform_int(rng, 2, 8);
        const auto edges = oracle::random_connected_graph(n, oracle::uniform(rng, 0.1, 0.7), rng);
        const Incidence inc =
            Incidence::from_edges(n, edges, oracle::random_weights(static_cast<int>(edges.size()), rng));
        const BridgeDecomposition decomp = find_bridges(inc);
        for (BasisSearch s : {BasisSearch::None, BasisSearch::Roots, BasisSearch::Coupling}) {
            check_basis_invariants(inc, decomp, select_cycle_basis(decomp, inc, s));
        }
        check_basis_invariants(inc, decomp, dfs_cycle_basis(decomp, inc, {{}, NeighborOrder::Weight}));
    }
}

TEST_CASE("root search never increases overlap; coupling search never increases the radius") {
    oracle::Rng rng(14);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = oracle::uniform_int(rng, 4, 10);
        const auto edges = oracle::random_connected_graph(n, 0.5, rng);
        const Incidence inc =
            Incidence::from_edges(n, edges, oracle::random_weights(static_cast<int>(edges.size()), rng));
        const BridgeDecomposition decomp = find_bridges(inc);
        const CycleBasis base = select_cycle_basis(decomp, inc, BasisSearch::None);
        const CycleBasis roots = select_cycle_basis(decomp, inc, BasisSearch::Roots);
        const CycleBasis coupling = select_cycle_basis(decomp, inc, BasisSearch::Coupling);
        CHECK(cycle_overlap(roots) <= cycle_overlap(base));
        CHECK(coupling_radius(coupling, inc) <= coupling_radius(base, inc) + 1e-12);
    }
}

TEST_CASE("cycle overlap counts shared edge pairs") {
    const Incidence inc = fig1();
    const CycleBasis basis = dfs_cycle_basis(find_bridges(inc), inc);
    // e3 and e5 each lie on both cycles.
    CHECK(cycle_overlap(basis) == 2);
    CHECK(basis.cycle_counts() == std::vector<int>{1, 1, 2, 1, 2});
}

TEST_CASE("basis construction is deterministic") {
    const Incidence inc = load("/case14.m");
    const BridgeDecomposition decomp = find_bridges(inc);
    for (BasisSearch s : {BasisSearch::None, BasisSearch::Roots, BasisSearch::Coupling}) {
        const CycleBasis a = select_cycle_basis(decomp, inc, s), b = select_cycle_basis(decomp, inc, s);
        CHECK(a.matrix() == b.matrix());
        CHECK(a.roots == b.roots);
        CHECK(a.reoriented_edges == b.reoriented_edges);
    }
}

TEST_CASE("DOT export marks tree, back and bridge edges") {
    const Network net = losslessify(read_case_file(kData + "/case14.m"));
    const Incidence inc = build_incidence(net);
    const CycleBasis basis = dfs_cycle_basis(find_bridges(inc), inc);
    const std::string dot = to_dot(inc, basis, net.bus_ids);
    auto count = [&](const std::string& needle) {
        std::size_t k = 0;
        for (auto pos = dot.find(needle); pos != std::string::npos; pos = dot.find(needle, pos + 1)) ++k;
        return k;
    };
    CHECK(dot.rfind("digraph", 0) == 0);
    CHECK(count("class=\"back\"") == 7);
    CHECK(count("class=\"tree\"") == 12);
    CHECK(count("class=\"bridge\"") == 1);
    CHECK(dot.find("\"7\" -> \"8\" [class=\"bridge\"") != std::string::npos);
}

TEST_CASE("root policy validation") {
    const Incidence inc = fig1();
    const BridgeDecomposition decomp = find_bridges(inc);
    CHECK_THROWS_AS(dfs_cycle_basis(decomp, inc, {{0, 1}, NeighborOrder::Index}), ValidationError);
    for (int r = 0; r < 4; ++r) {
        const CycleBasis basis = dfs_cycle_basis(decomp, inc, {{r}, NeighborOrder::Index});
        CHECK(basis.roots == std::vector<int>{r});
        check_basis_invariants(inc, decomp, basis);
    }
}
