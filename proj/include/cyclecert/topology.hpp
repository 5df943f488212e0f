#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cyclecert/network.hpp"

namespace cyclecert {

struct Edge {
    int source = 0;
    int sink = 0;
};

/// Oriented incidence structure: A_ke = +1 at an edge's source, -1 at its sink; D = diag(weight).
struct Incidence {
    int n = 0;
    std::vector<Edge> edges;
    Eigen::VectorXd weight;  // diagonal of D, strictly positive

    int m() const { return static_cast<int>(edges.size()); }

    Eigen::MatrixXi a_matrix() const;
    Eigen::SparseMatrix<double> a_sparse() const;

    /// A^T x, evaluated edge by edge.
    Eigen::VectorXd edge_differences(const Eigen::VectorXd& x) const;
    /// A y, evaluated edge by edge.
    Eigen::VectorXd node_sums(const Eigen::VectorXd& y) const;

    static Incidence from_edges(int n, std::vector<Edge> edges, Eigen::VectorXd weight);
};

Incidence build_incidence(const Network& net);

struct Component {
    std::vector<int> nodes;  // ascending
    std::vector<int> edges;  // ascending
};

struct BridgeDecomposition {
    std::vector<int> bridges;  // ascending edge indices
    std::vector<bool> is_bridge;
    /// 2-edge-connected pieces ordered by lowest node; isolated nodes form edgeless components.
    std::vector<Component> components;
    std::vector<int> component_of_node;

    int cyclic_component_count() const;
};

/// Tarjan low-link bridge search, iterative.
BridgeDecomposition find_bridges(const Incidence& inc);

enum class EdgeRole { Tree, Back, Bridge };

struct Cycle {
    int back_edge = -1;
    int component = -1;
    /// Back edge first, then the tree path from the descendant up to the ancestor.
    std::vector<int> edges;
};

struct CycleBasis {
    int edge_count = 0;
    std::vector<Cycle> cycles;
    std::vector<EdgeRole> roles;
    /// +1 when the stored direction was kept, -1 when flipped for consistency.
    std::vector<int> orientation;
    std::vector<int> roots;  // one per component of the decomposition
    std::vector<int> reoriented_edges;

    int q() const { return static_cast<int>(cycles.size()); }
    /// m x q over {0, 1} in the reoriented frame.
    Eigen::MatrixXi matrix() const;
    /// Number of basis cycles through each edge.
    std::vector<int> cycle_counts() const;
    std::vector<int> edges_with_role(EdgeRole role) const;
};

enum class NeighborOrder {
    Index,   // ascending neighbor index
    Weight,  // heaviest edge first, ties by neighbor index
};

struct DfsPolicy {
    /// Root per component; empty means the lowest node of each component.
    std::vector<int> roots;
    NeighborOrder order = NeighborOrder::Index;
};

/// DFS fundamental cycles per bridgeless component. Tree edges point child -> parent,
/// back edges ancestor -> descendant, so every column is nonnegative.
CycleBasis dfs_cycle_basis(const BridgeDecomposition& decomp, const Incidence& inc, const DfsPolicy& policy = {});

enum class BasisSearch {
    None,      // lowest root, ascending neighbor order
    Roots,     // every root, ascending order; least total overlap
    Coupling,  // every root, both neighbor orders; weakest cycle coupling
};

CycleBasis select_cycle_basis(const BridgeDecomposition& decomp, const Incidence& inc, BasisSearch search);

/// Sum over edges of (c_e choose 2).
long cycle_overlap(const CycleBasis& basis, int component = -1);

/// Spectral radius of the off-diagonal part of the unit-diagonal scaling of C^T D^{-1} C.
/// Below 1 the cycle coupling is diagonally dominant after rescaling.
double coupling_radius(const CycleBasis& basis, const Incidence& inc, int component = -1);

/// The same edges with every flipped edge's source and sink swapped.
Incidence reorient(const Incidence& inc, const CycleBasis& basis);

/// Graphviz dump: tree edges solid, back edges red, bridges dashed; labels use bus ids when given.
std::string to_dot(const Incidence& inc, const CycleBasis& basis, const std::vector<int>& bus_ids = {});

}  // namespace cyclecert
