#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cyclecert/network.hpp"

namespace cyclecert {

/// Parses a MATPOWER `.m` case or the JSON network schema (detected by a leading `{`).
/// Out-of-service generators and branches are dropped.
RawCase parse_case(std::string_view text);

RawCase parse_matpower(std::string_view text);

/// `{baseMVA?, buses:[{id,vm}], branches:[{from,to,x,b?,status?}], injections:[{id,p}]}`.
/// `p` is in MW when `baseMVA` is given and in p.u. otherwise (baseMVA defaults to 1).
RawCase parse_json_case(std::string_view text);

RawCase read_case_file(const std::filesystem::path& path);

Network losslessify(const RawCase& raw, const LosslessOptions& opts = {});

/// Canonical JSON in the input schema. Reparsing with VoltagePolicy::Case reproduces
/// the network bit for bit.
std::string serialize_network(const Network& net);

}  // namespace cyclecert
