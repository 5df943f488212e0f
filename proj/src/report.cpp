#include "cyclecert/report.hpp"

#include <fmt/format.h>

namespace cyclecert {

namespace {

Json vec(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Json edge_pair(const Network& net, const Edge& e) {
    return Json::array({net.bus_ids[e.source], net.bus_ids[e.sink]});
}

Json angles(const Eigen::VectorXd& theta, const Network& net) {
    Json out = Json::array();
    for (int i = 0; i < net.n(); ++i) out.push_back({{"bus", net.bus_ids[i]}, {"rad", theta[i]}});
    return out;
}

}  // namespace

Json certificate_json(const Certificate& cert, const Certifier& ctx) {
    const Network& net = ctx.network();
    Json j;
    j["verdict"] = to_string(cert.verdict);
    j["reason"] = cert.reason == Reason::None ? Json(nullptr) : Json(to_string(cert.reason));
    if (cert.offending_edge) j["offendingEdge"] = edge_pair(net, ctx.oriented().edges[*cert.offending_edge]);
    j["margin"] = cert.margin;

    j["box"] = {{"lo", vec(cert.box.lo)},
                {"hi", vec(cert.box.hi)},
                {"center", vec(cert.box.center)},
                {"scale", cert.box.scale},
                {"degenerate", cert.box.degenerate}};
    j["faces"] = {{"lower", vec(cert.faces.lower)}, {"upper", vec(cert.faces.upper)}};
    if (cert.lambda_star) j["lambdaStar"] = vec(*cert.lambda_star);
    if (cert.theta) {
        j["theta"] = {{"angles", angles(cert.theta->theta, net)},
                      {"maxAngleDiff", cert.theta->max_angle_diff},
                      {"residual", cert.theta->residual}};
    }
    if (cert.recovery_error) j["recoveryError"] = *cert.recovery_error;

    const Diagnostics& d = cert.diagnostics;
    Json diag = {{"zInf", d.z_inf},
                 {"lambda2", d.lambda2},
                 {"centerResidual", d.center_residual},
                 {"monotoneCheck", d.monotone_check}};
    if (d.upper_slack.size()) {
        Json slacks = Json::array();
        for (int e = 0; e < ctx.oriented().m(); ++e) {
            slacks.push_back({{"edge", edge_pair(net, ctx.oriented().edges[e])},
                              {"upper", d.upper_slack[e]},
                              {"lower", d.lower_slack[e]}});
        }
        diag["edgeSlacks"] = std::move(slacks);
    }
    j["diagnostics"] = std::move(diag);

    const CycleBasis& basis = ctx.basis();
    Json roots = Json::array(), flipped = Json::array(), cycles = Json::array();
    for (int r : cert.provenance.roots) roots.push_back(net.bus_ids[r]);
    for (int e : cert.provenance.reoriented_edges) flipped.push_back(edge_pair(net, ctx.incidence().edges[e]));
    for (const Cycle& c : basis.cycles) {
        Json edges = Json::array();
        for (int e : c.edges) edges.push_back(edge_pair(net, ctx.oriented().edges[e]));
        cycles.push_back(std::move(edges));
    }
    j["provenance"] = {{"basisSearch", to_string(cert.provenance.basis_search)},
                       {"roots", std::move(roots)},
                       {"reorientedEdges", std::move(flipped)},
                       {"cycles", std::move(cycles)},
                       {"boxPolicy", to_string(cert.provenance.box_policy)},
                       {"boxScale", cert.box.scale},
                       {"evaluations", cert.provenance.evaluations}};
    return j;
}

Json nr_json(const NRResult& res, const Network& net) {
    Json j = {{"converged", res.converged},
              {"success", res.success},
              {"iterations", res.iterations},
              {"finalResidual", res.final_residual},
              {"maxAngleDiff", res.max_angle_diff}};
    if (!res.message.empty()) j["message"] = res.message;
    if (res.theta.size()) j["theta"] = angles(res.theta, net);
    return j;
}

Json sweep_json(const SweepResult& res, bool include_trace) {
    Json j = {{"yCert", res.y_cert},
              {"yNR", res.y_nr},
              {"eta", res.eta},
              {"etaPercent", 100.0 * res.eta},
              {"tolerance", res.tolerance},
              {"yMax", res.y_max},
              {"sufficiencyViolations", res.sufficiency_violations},
              {"warnings", res.warnings}};
    if (include_trace) {
        Json trace = Json::array();
        for (const auto& s : res.trace) {
            trace.push_back({{"y", s.y},
                             {"verdict", to_string(s.verdict)},
                             {"reason", s.reason == Reason::None ? Json(nullptr) : Json(to_string(s.reason))},
                             {"thetaValidated", s.theta_validated},
                             {"nrSuccess", s.nr_success}});
        }
        j["trace"] = std::move(trace);
    }
    return j;
}

Json topology_json(const Certifier& ctx) {
    const Network& net = ctx.network();
    const BridgeDecomposition& decomp = ctx.decomposition();
    Json bridges = Json::array(), components = Json::array();
    for (int e : decomp.bridges) bridges.push_back(edge_pair(net, ctx.incidence().edges[e]));
    for (const Component& c : decomp.components) {
        Json buses = Json::array();
        for (int v : c.nodes) buses.push_back(net.bus_ids[v]);
        components.push_back({{"buses", std::move(buses)}, {"edges", c.edges.size()}});
    }
    Json roots = Json::array(), cycles = Json::array();
    for (int r : ctx.basis().roots) roots.push_back(net.bus_ids[r]);
    for (const Cycle& c : ctx.basis().cycles) {
        Json edges = Json::array();
        for (int e : c.edges) edges.push_back(edge_pair(net, ctx.oriented().edges[e]));
        cycles.push_back(std::move(edges));
    }
    return {{"n", net.n()},
            {"m", net.m()},
            {"bridges", std::move(bridges)},
            {"components", std::move(components)},
            {"q", ctx.basis().q()},
            {"basisSearch", to_string(ctx.options().basis_search)},
            {"roots", std::move(roots)},
            {"cycles", std::move(cycles)},
            {"dot", to_dot(ctx.incidence(), ctx.basis(), net.bus_ids)}};
}

std::string sweep_csv_header() { return "case,yCert,yNR,eta,basisPolicy,boxPolicy,wallTime"; }

std::string sweep_csv_row(const std::string& case_name, const SweepResult& res, BasisSearch basis, BoxPolicy box,
                          const std::string& wall_time) {
    return fmt::format("{},{:.6f},{:.6f},{:.6f},{},{},{}", case_name, res.y_cert, res.y_nr, res.eta,
                       to_string(basis), to_string(box), wall_time);
}

}  // namespace cyclecert
