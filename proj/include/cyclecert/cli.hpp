#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cyclecert/certify.hpp"
#include "cyclecert/network.hpp"

namespace cyclecert {

enum class Command { Certify, Sweep, Topo, Nr };
enum class OutputFormat { Json, Csv, Text };

struct RunConfig {
    Command command = Command::Certify;
    std::vector<std::string> inputs;  // sweep accepts several cases
    VoltagePolicy voltage = VoltagePolicy::Flat;
    std::optional<int> slack_bus;
    BasisSearch basis_search = BasisSearch::Coupling;
    BoxPolicy box_policy = BoxPolicy::Auto;
    std::vector<double> box_scale_grid = CertifyOptions{}.scale_grid;
    double tol = 1e-3;
    double y_max = 20.0;
    /// Unset: csv for sweep, json otherwise.
    std::optional<OutputFormat> format;
    bool recover_solution = false;
    bool no_meta = false;
    std::uint64_t seed = 0;
    int threads = 0;  // sweep workers; 0 = hardware concurrency
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInconclusive = 2;

/// Reports go to `out`, diagnostics to `err`. Log level from CYCLECERT_LOG.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

std::string to_string(Command c);
std::string to_string(OutputFormat f);

}  // namespace cyclecert
