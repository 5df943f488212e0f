#include "cyclecert/topology.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <tuple>

#include <spdlog/spdlog.h>

#include "cyclecert/errors.hpp"

namespace cyclecert {

// ---------------------------------------------------------------------------
// Incidence
// ---------------------------------------------------------------------------

Incidence Incidence::from_edges(int n, std::vector<Edge> edges, Eigen::VectorXd weight) {
    if (static_cast<Eigen::Index>(edges.size()) != weight.size()) {
        throw ValidationError("edge and weight counts differ");
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [s, t] = edges[e];
        if (s < 0 || t < 0 || s >= n || t >= n || s == t) {
            throw ValidationError("edge " + std::to_string(e) + " has invalid endpoints");
        }
        if (!(weight[static_cast<Eigen::Index>(e)] > 0.0)) {
            throw ValidationError("edge " + std::to_string(e) + " has non-positive weight");
        }
    }
    return Incidence{n, std::move(edges), std::move(weight)};
}

Incidence build_incidence(const Network& net) {
    Incidence inc;
    inc.n = net.n();
    inc.edges.reserve(net.branches.size());
    inc.weight.resize(net.m());
    for (int e = 0; e < net.m(); ++e) {
        inc.edges.push_back({net.branches[e].source, net.branches[e].sink});
        inc.weight[e] = net.branches[e].weight;
    }
    return inc;
}

Eigen::MatrixXi Incidence::a_matrix() const {
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, m());
    for (int e = 0; e < m(); ++e) {
        a(edges[e].source, e) = 1;
        a(edges[e].sink, e) = -1;
    }
    return a;
}

Eigen::SparseMatrix<double> Incidence::a_sparse() const {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * edges.size());
    for (int e = 0; e < m(); ++e) {
        entries.emplace_back(edges[e].source, e, 1.0);
        entries.emplace_back(edges[e].sink, e, -1.0);
    }
    Eigen::SparseMatrix<double> a(n, m());
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
}

Eigen::VectorXd Incidence::edge_differences(const Eigen::VectorXd& x) const {
    Eigen::VectorXd d(m());
    for (int e = 0; e < m(); ++e) d[e] = x[edges[e].source] - x[edges[e].sink];
    return d;
}

Eigen::VectorXd Incidence::node_sums(const Eigen::VectorXd& y) const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (int e = 0; e < m(); ++e) {
        s[edges[e].source] += y[e];
        s[edges[e].sink] -= y[e];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Bridges
// ---------------------------------------------------------------------------

namespace {

struct Arc {
    int to;
    int edge;
};

std::vector<std::vector<Arc>> adjacency(const Incidence& inc) {
    std::vector<std::vector<Arc>> adj(inc.n);
    for (int e = 0; e < inc.m(); ++e) {
        adj[inc.edges[e].source].push_back({inc.edges[e].sink, e});
        adj[inc.edges[e].sink].push_back({inc.edges[e].source, e});
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end(), [](Arc a, Arc b) { return std::tie(a.to, a.edge) < std::tie(b.to, b.edge); });
    }
    return adj;
}

}  // namespace

int BridgeDecomposition::cyclic_component_count() const {
    return static_cast<int>(std::count_if(components.begin(), components.end(),
                                          [](const Component& c) { return !c.edges.empty(); }));
}

BridgeDecomposition find_bridges(const Incidence& inc) {
    const auto adj = adjacency(inc);
    const int n = inc.n;

    BridgeDecomposition out;
    out.is_bridge.assign(inc.m(), false);

    std::vector<int> disc(n, -1), low(n, 0);
    int timer = 0;
    struct Frame {
        int node;
        int parent_edge;
        std::size_t next;
    };
    std::vector<Frame> stack;
    for (int s = 0; s < n; ++s) {
        if (disc[s] != -1) continue;
        disc[s] = low[s] = timer++;
        stack.push_back({s, -1, 0});
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < adj[f.node].size()) {
                const Arc arc = adj[f.node][f.next++];
                if (arc.edge == f.parent_edge) continue;
                if (disc[arc.to] == -1) {
                    disc[arc.to] = low[arc.to] = timer++;
                    stack.push_back({arc.to, arc.edge, 0});
                } else {
                    low[f.node] = std::min(low[f.node], disc[arc.to]);
                }
            } else {
                const Frame done = f;
                stack.pop_back();
                if (!stack.empty()) {
                    const int p = stack.back().node;
                    low[p] = std::min(low[p], low[done.node]);
                    if (low[done.node] > disc[p]) out.is_bridge[done.parent_edge] = true;
                }
            }
        }
    }
    for (int e = 0; e < inc.m(); ++e) {
        if (out.is_bridge[e]) out.bridges.push_back(e);
    }

    // Components of the bridge-free graph, discovered from the lowest node upward.
    out.component_of_node.assign(n, -1);
    for (int s = 0; s < n; ++s) {
        if (out.component_of_node[s] != -1) continue;
        const int id = static_cast<int>(out.components.size());
        Component comp;
        std::vector<int> frontier{s};
        out.component_of_node[s] = id;
        while (!frontier.empty()) {
            const int u = frontier.back();
            frontier.pop_back();
            comp.nodes.push_back(u);
            for (const Arc& arc : adj[u]) {
                if (out.is_bridge[arc.edge]) continue;
                if (out.component_of_node[arc.to] == -1) {
                    out.component_of_node[arc.to] = id;
                    frontier.push_back(arc.to);
                }
            }
        }
        std::sort(comp.nodes.begin(), comp.nodes.end());
        out.components.push_back(std::move(comp));
    }
    for (int e = 0; e < inc.m(); ++e) {
        if (!out.is_bridge[e]) out.components[out.component_of_node[inc.edges[e].source]].edges.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cycle basis
// ---------------------------------------------------------------------------

Eigen::MatrixXi CycleBasis::matrix() const {
    Eigen::MatrixXi c = Eigen::MatrixXi::Zero(edge_count, q());
    for (int k = 0; k < q(); ++k) {
        for (int e : cycles[k].edges) c(e, k) = 1;
    }
    return c;
}

std::vector<int> CycleBasis::cycle_counts() const {
    std::vector<int> counts(edge_count, 0);
    for (const auto& cycle : cycles) {
        for (int e : cycle.edges) ++counts[e];
    }
    return counts;
}

std::vector<int> CycleBasis::edges_with_role(EdgeRole role) const {
    std::vector<int> out;
    for (int e = 0; e < edge_count; ++e) {
        if (roles[e] == role) out.push_back(e);
    }
    return out;
}

namespace {

/// DFS result for a single bridgeless component.
struct ComponentBasis {
    int root = -1;
    std::vector<Cycle> cycles;
    std::vector<std::pair<int, int>> oriented;  // (edge, orientation)
    std::vector<std::pair<int, EdgeRole>> roles;
};

ComponentBasis dfs_component(const Component& comp, int comp_id, const Incidence& inc, int root, NeighborOrder order) {
    ComponentBasis out;
    out.root = root;
    if (comp.edges.empty()) return out;

    // Local adjacency restricted to the component's edges.
    std::vector<std::vector<Arc>> adj(inc.n);
    for (int e : comp.edges) {
        adj[inc.edges[e].source].push_back({inc.edges[e].sink, e});
        adj[inc.edges[e].sink].push_back({inc.edges[e].source, e});
    }
    for (int u : comp.nodes) {
        auto& list = adj[u];
        if (order == NeighborOrder::Index) {
            std::sort(list.begin(), list.end(),
                      [](Arc a, Arc b) { return std::tie(a.to, a.edge) < std::tie(b.to, b.edge); });
        } else {
            std::sort(list.begin(), list.end(), [&](Arc a, Arc b) {
                const double wa = inc.weight[a.edge], wb = inc.weight[b.edge];
                if (wa != wb) return wa > wb;
                return std::tie(a.to, a.edge) < std::tie(b.to, b.edge);
            });
        }
    }

    std::vector<char> visited(inc.n, 0);
    std::vector<int> parent_edge(inc.n, -1), parent(inc.n, -1);
    std::vector<char> classified(inc.m(), 0);

    auto orient = [&](int e, int from) { return inc.edges[e].source == from ? 1 : -1; };

    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    visited[root] = 1;
    while (!stack.empty()) {
        auto& [u, next] = stack.back();
        if (next == adj[u].size()) {
            stack.pop_back();
            continue;
        }
        const Arc arc = adj[u][next++];
        if (classified[arc.edge]) continue;
        classified[arc.edge] = 1;
        const int from = u;
        if (!visited[arc.to]) {
            // Tree edge, oriented child -> parent.
            visited[arc.to] = 1;
            parent[arc.to] = from;
            parent_edge[arc.to] = arc.edge;
            out.oriented.emplace_back(arc.edge, orient(arc.edge, arc.to));
            out.roles.emplace_back(arc.edge, EdgeRole::Tree);
            stack.emplace_back(arc.to, 0);
        } else {
            // Back edge to an ancestor, oriented ancestor -> descendant.
            out.oriented.emplace_back(arc.edge, orient(arc.edge, arc.to));
            out.roles.emplace_back(arc.edge, EdgeRole::Back);
            Cycle cycle;
            cycle.back_edge = arc.edge;
            cycle.component = comp_id;
            cycle.edges.push_back(arc.edge);
            for (int w = from; w != arc.to; w = parent[w]) cycle.edges.push_back(parent_edge[w]);
            out.cycles.push_back(std::move(cycle));
        }
    }
    return out;
}

CycleBasis assemble(const BridgeDecomposition& decomp, const Incidence& inc, const std::vector<ComponentBasis>& parts) {
    CycleBasis basis;
    basis.edge_count = inc.m();
    basis.roles.assign(inc.m(), EdgeRole::Bridge);
    basis.orientation.assign(inc.m(), 1);
    for (std::size_t c = 0; c < parts.size(); ++c) {
        const auto& part = parts[c];
        basis.roots.push_back(part.root);
        for (auto [e, o] : part.oriented) basis.orientation[e] = o;
        for (auto [e, r] : part.roles) basis.roles[e] = r;
        basis.cycles.insert(basis.cycles.end(), part.cycles.begin(), part.cycles.end());
    }
    for (int e = 0; e < inc.m(); ++e) {
        if (basis.orientation[e] < 0) basis.reoriented_edges.push_back(e);
    }
    (void)decomp;
    return basis;
}

long overlap_of(const std::vector<Cycle>& cycles, int m) {
    std::vector<long> counts(m, 0);
    for (const auto& c : cycles) {
        for (int e : c.edges) ++counts[e];
    }
    long total = 0;
    for (long c : counts) total += c * (c - 1) / 2;
    return total;
}

double radius_of(const std::vector<const Cycle*>& cycles, const Incidence& inc) {
    const int q = static_cast<int>(cycles.size());
    if (q <= 1) return 0.0;
    std::vector<std::vector<int>> through(inc.m());
    for (int k = 0; k < q; ++k) {
        for (int e : cycles[k]->edges) through[e].push_back(k);
    }
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(q, q);
    for (int e = 0; e < inc.m(); ++e) {
        const double r = 1.0 / inc.weight[e];
        for (int a : through[e]) {
            for (int b : through[e]) j(a, b) += r;
        }
    }
    const Eigen::VectorXd scale = j.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd off = scale.asDiagonal() * j * scale.asDiagonal();
    off.diagonal().setZero();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(off, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

std::vector<const Cycle*> cycles_of(const std::vector<Cycle>& cycles, int component) {
    std::vector<const Cycle*> out;
    for (const auto& c : cycles) {
        if (component < 0 || c.component == component) out.push_back(&c);
    }
    return out;
}

constexpr std::size_t kMaxRootCandidates = 64;

std::vector<int> root_candidates(const Component& comp) {
    if (comp.nodes.size() <= kMaxRootCandidates) return comp.nodes;
    std::vector<int> picked;
    for (std::size_t i = 0; i < kMaxRootCandidates; ++i) {
        picked.push_back(comp.nodes[i * comp.nodes.size() / kMaxRootCandidates]);
    }
    return picked;
}

}  // namespace

CycleBasis dfs_cycle_basis(const BridgeDecomposition& decomp, const Incidence& inc, const DfsPolicy& policy) {
    if (!policy.roots.empty() && policy.roots.size() != decomp.components.size()) {
        throw ValidationError("root policy must name one root per component");
    }
    std::vector<ComponentBasis> parts;
    for (std::size_t c = 0; c < decomp.components.size(); ++c) {
        const auto& comp = decomp.components[c];
        const int root = policy.roots.empty() ? comp.nodes.front() : policy.roots[c];
        if (!std::binary_search(comp.nodes.begin(), comp.nodes.end(), root)) {
            throw ValidationError("root " + std::to_string(root) + " is not in component " + std::to_string(c));
        }
        parts.push_back(dfs_component(comp, static_cast<int>(c), inc, root, policy.order));
    }
    return assemble(decomp, inc, parts);
}

CycleBasis select_cycle_basis(const BridgeDecomposition& decomp, const Incidence& inc, BasisSearch search) {
    if (search == BasisSearch::None) return dfs_cycle_basis(decomp, inc);

    std::vector<NeighborOrder> orders{NeighborOrder::Index};
    if (search == BasisSearch::Coupling) orders.push_back(NeighborOrder::Weight);

    std::vector<ComponentBasis> parts;
    for (std::size_t c = 0; c < decomp.components.size(); ++c) {
        const auto& comp = decomp.components[c];
        const int comp_id = static_cast<int>(c);
        ComponentBasis best = dfs_component(comp, comp_id, inc, comp.nodes.front(), NeighborOrder::Index);
        if (comp.edges.empty()) {
            parts.push_back(std::move(best));
            continue;
        }
        auto score = [&](const ComponentBasis& part) {
            const double radius = search == BasisSearch::Coupling ? radius_of(cycles_of(part.cycles, -1), inc) : 0.0;
            return std::pair{radius, overlap_of(part.cycles, inc.m())};
        };
        auto best_score = score(best);
        for (NeighborOrder order : orders) {
            for (int root : root_candidates(comp)) {
                ComponentBasis candidate = dfs_component(comp, comp_id, inc, root, order);
                const auto s = score(candidate);
                // Strict improvement only, so earlier candidates win ties.
                if (s.first < best_score.first - 1e-12 ||
                    (std::abs(s.first - best_score.first) <= 1e-12 && s.second < best_score.second)) {
                    best = std::move(candidate);
                    best_score = s;
                }
            }
        }
        spdlog::debug("component {}: root {} coupling {:.4f} overlap {}", c, best.root, best_score.first,
                      best_score.second);
        parts.push_back(std::move(best));
    }
    return assemble(decomp, inc, parts);
}

long cycle_overlap(const CycleBasis& basis, int component) {
    std::vector<Cycle> picked;
    for (const auto* c : cycles_of(basis.cycles, component)) picked.push_back(*c);
    return overlap_of(picked, basis.edge_count);
}

double coupling_radius(const CycleBasis& basis, const Incidence& inc, int component) {
    if (component >= 0) return radius_of(cycles_of(basis.cycles, component), inc);
    double worst = 0.0;
    int components = 0;
    for (const auto& c : basis.cycles) components = std::max(components, c.component + 1);
    for (int c = 0; c < components; ++c) worst = std::max(worst, radius_of(cycles_of(basis.cycles, c), inc));
    return worst;
}

Incidence reorient(const Incidence& inc, const CycleBasis& basis) {
    Incidence out = inc;
    for (int e : basis.reoriented_edges) std::swap(out.edges[e].source, out.edges[e].sink);
    return out;
}

std::string to_dot(const Incidence& inc, const CycleBasis& basis, const std::vector<int>& bus_ids) {
    auto name = [&](int v) { return bus_ids.empty() ? std::to_string(v) : std::to_string(bus_ids[v]); };
    std::vector<int> cycle_of_back(inc.m(), -1);
    for (int k = 0; k < basis.q(); ++k) cycle_of_back[basis.cycles[k].back_edge] = k;

    std::ostringstream out;
    out << "digraph cyclecert {\n  node [shape=circle];\n";
    for (int v = 0; v < inc.n; ++v) out << "  \"" << name(v) << "\";\n";
    for (int e = 0; e < inc.m(); ++e) {
        int s = inc.edges[e].source, t = inc.edges[e].sink;
        if (basis.orientation[e] < 0) std::swap(s, t);
        out << "  \"" << name(s) << "\" -> \"" << name(t) << "\" [";
        switch (basis.roles[e]) {
        case EdgeRole::Tree:
            out << "class=\"tree\", color=\"darkgreen\", label=\"e" << e << "\"";
            break;
        case EdgeRole::Back:
            out << "class=\"back\", color=\"red\", label=\"e" << e << " c" << cycle_of_back[e] << "\"";
            break;
        case EdgeRole::Bridge:
            out << "class=\"bridge\", style=\"dashed\", dir=\"none\", label=\"e" << e << "\"";
            break;
        }
        if (basis.orientation[e] < 0) out << ", reoriented=\"true\"";
        out << "];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace cyclecert
