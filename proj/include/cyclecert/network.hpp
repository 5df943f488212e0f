#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace cyclecert {

// ---------------------------------------------------------------------------
// Raw case records, units as in the source file (MW, p.u.).
// ---------------------------------------------------------------------------

struct RawBus {
    int id = 0;
    int type = 1;
    double pd_mw = 0.0;
    double vm = 1.0;
};

struct RawGen {
    int bus = 0;
    double pg_mw = 0.0;
};

struct RawBranch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double charging = 0.0;
    /// Series susceptance given directly (JSON `b`); overrides 1/x when set.
    std::optional<double> susceptance;
    int line = 0;
};

struct RawCase {
    double base_mva = 100.0;
    std::vector<RawBus> buses;
    std::vector<RawGen> gens;
    std::vector<RawBranch> branches;
};

// ---------------------------------------------------------------------------
// Lossless network model.
// ---------------------------------------------------------------------------

enum class VoltagePolicy { Flat, Case };

struct LosslessOptions {
    VoltagePolicy voltage = VoltagePolicy::Flat;
    /// Bus id absorbing the injection mismatch; uniform projection when unset.
    std::optional<int> slack_bus;
};

/// One edge of the simple graph. Endpoints are internal bus indices, source < sink.
struct Branch {
    int source = 0;
    int sink = 0;
    double susceptance = 0.0;  // B_ij = sum of 1/x over merged parallel branches
    double weight = 0.0;       // V_i * V_j * B_ij
};

struct MergeRecord {
    int bus_a = 0;  // bus ids
    int bus_b = 0;
    int count = 0;
    double susceptance = 0.0;
};

struct LosslessReport {
    std::vector<MergeRecord> merged;
    double mismatch = 0.0;       // sum of raw injections, p.u.
    double shift_per_bus = 0.0;  // subtracted from every bus by the projection
    bool projected = false;
};

struct Network {
    std::vector<int> bus_ids;    // sorted ascending; position = internal index
    Eigen::VectorXd voltage;     // p.u.
    Eigen::VectorXd injection;   // p.u., sums to zero
    std::vector<Branch> branches;  // sorted by (source, sink)
    LosslessReport report;

    int n() const { return static_cast<int>(bus_ids.size()); }
    int m() const { return static_cast<int>(branches.size()); }

    /// Internal index of a bus id; throws ValidationError when absent.
    int index_of(int bus_id) const;

    Network with_injection(const Eigen::VectorXd& p) const {
        Network copy = *this;
        copy.injection = p;
        return copy;
    }
};

}  // namespace cyclecert
