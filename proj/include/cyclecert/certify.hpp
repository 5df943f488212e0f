#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cyclecert/flowcore.hpp"
#include "cyclecert/network.hpp"
#include "cyclecert/topology.hpp"

namespace cyclecert {

/// Axis-aligned box [lo, hi] in cycle-flow coordinates.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    Eigen::VectorXd center;
    double scale = 0.0;       // t in center +- t * w
    bool degenerate = false;  // z(center) touches +-1 on a cycle edge

    int q() const { return static_cast<int>(lo.size()); }
};

enum class BoxPolicy {
    SlackShare,  // each edge slack split evenly among the cycles through it
    Dominance,   // widths from the comparison matrix of the cycle Jacobian at the center
    Auto,        // Dominance, then SlackShare
};

struct CertifyOptions {
    BasisSearch basis_search = BasisSearch::Coupling;
    BoxPolicy box_policy = BoxPolicy::Auto;
    /// Descending scales tried first; halving continues below the smallest one.
    std::vector<double> scale_grid = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
    int max_evaluations = 40;  // per box policy
    bool recover_solution = false;
    RecoveryTolerances recovery;
};

enum class Verdict { Certified, Inconclusive };

enum class Reason { None, BridgeOverload, FaceCondition, DegenerateBox };

struct FaceValues {
    Eigen::VectorXd lower;  // g_i at (hi_1..lo_i..hi_q), must be <= 0
    Eigen::VectorXd upper;  // g_i at (lo_1..hi_i..lo_q), must be >= 0

    /// min_i min(-lower_i, upper_i); nonnegative iff the sign conditions hold.
    double margin() const;
};

struct CenterResult {
    Eigen::VectorXd lambda;
    double residual = 0.0;  // ||g(lambda)||_inf
    bool converged = false;
};

struct Diagnostics {
    double z_inf = 0.0;    // ||z0||_inf
    double lambda2 = 0.0;  // algebraic connectivity of L
    double center_residual = 0.0;
    bool monotone_check = true;  // finite-difference spot check at the center
    Eigen::VectorXd upper_slack;  // 1 - z_e(hi)
    Eigen::VectorXd lower_slack;  // 1 + z_e(lo)
};

struct Provenance {
    BasisSearch basis_search = BasisSearch::None;
    std::vector<int> roots;             // internal node indices
    std::vector<int> reoriented_edges;  // edge indices flipped w.r.t. the incidence
    BoxPolicy box_policy = BoxPolicy::Auto;  // policy that produced the reported box
    int evaluations = 0;
};

struct Certificate {
    Verdict verdict = Verdict::Inconclusive;
    Reason reason = Reason::None;
    std::optional<int> offending_edge;  // bridge overload only
    double margin = 0.0;  // face margin of the reported box, or 1 - |z0| on the worst bridge
    Box box;
    FaceValues faces;
    std::optional<Eigen::VectorXd> lambda_star;
    std::optional<AngleSolution> theta;
    std::optional<std::string> recovery_error;
    Diagnostics diagnostics;
    Provenance provenance;

    bool certified() const { return verdict == Verdict::Certified; }
};

/// Damped Newton on g from lambda = 0, with load-scale continuation as fallback.
CenterResult find_center(const FlowParam& fp);

/// Unscaled half-widths w (t = 1) for a policy other than Auto; empty optional when the
/// policy has no valid widths at this center.
std::optional<Eigen::VectorXd> box_widths(const FlowParam& fp, const Eigen::VectorXd& center, BoxPolicy policy);

/// center +- scale * widths; flagged degenerate when z(center) is not strictly inside (-1, 1).
Box build_box(const FlowParam& fp, const Eigen::VectorXd& center, const Eigen::VectorXd& widths, double scale);

/// -1 <= z0 + H v <= 1 at every vertex v (checked at hi and lo since H >= 0).
bool box_feasible(const FlowParam& fp, const Box& box);

FaceValues check_faces(const FlowParam& fp, const Box& box);

/// g(center + h e_k) - g(center) >= 0 for every k.
bool spot_check_monotone(const FlowParam& fp, const Box& box);

/// A root of g inside a box whose faces pass. Newton from the center, then
/// coordinatewise bisection sweeps.
Eigen::VectorXd locate_root(const FlowParam& fp, const Box& box, double tol = 1e-12);

/// Scale sequence: the grid, then repeated halving of its smallest entry, `count` entries total.
std::vector<double> scale_sequence(const std::vector<double>& grid, int count);

/// Topology and factorization are built once; `certify` may then run for many injections.
class Certifier {
  public:
    explicit Certifier(const Network& net, CertifyOptions opts = {});

    Certificate certify(const Eigen::VectorXd& p) const;
    Certificate certify() const { return certify(net_.injection); }

    const Network& network() const { return net_; }
    const Incidence& incidence() const { return inc_; }
    const Incidence& oriented() const { return oriented_; }
    const BridgeDecomposition& decomposition() const { return decomp_; }
    const CycleBasis& basis() const { return basis_; }
    const CertifyOptions& options() const { return opts_; }
    FlowParam flow(const Eigen::VectorXd& p) const;

  private:
    Network net_;
    CertifyOptions opts_;
    Incidence inc_;
    BridgeDecomposition decomp_;
    CycleBasis basis_;
    Incidence oriented_;
    LaplacianSolver solver_;
    double lambda2_ = 0.0;
};

Certificate certify(const Network& net, const CertifyOptions& opts = {});

std::string to_string(Verdict v);
std::string to_string(Reason r);
std::string to_string(BoxPolicy p);
std::string to_string(BasisSearch s);

}  // namespace cyclecert
