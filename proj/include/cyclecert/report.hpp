#pragma once

#include <string>

#include <json.hpp>

#include "cyclecert/certify.hpp"
#include "cyclecert/refsolvers.hpp"
#include "cyclecert/sweep.hpp"

namespace cyclecert {

using Json = nlohmann::ordered_json;

/// Edges and nodes are reported by bus id. `ctx` supplies the topology the certificate was built on.
Json certificate_json(const Certificate& cert, const Certifier& ctx);
Json nr_json(const NRResult& res, const Network& net);
Json sweep_json(const SweepResult& res, bool include_trace = true);
Json topology_json(const Certifier& ctx);

/// `case,yCert,yNR,eta,basisPolicy,boxPolicy,wallTime`
std::string sweep_csv_header();
std::string sweep_csv_row(const std::string& case_name, const SweepResult& res, BasisSearch basis, BoxPolicy box,
                          const std::string& wall_time);

}  // namespace cyclecert
