#include "cyclecert/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cyclecert/errors.hpp"
#include "cyclecert/netparse.hpp"
#include "cyclecert/refsolvers.hpp"
#include "cyclecert/report.hpp"
#include "cyclecert/sweep.hpp"

namespace cyclecert {

namespace {

void init_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("cyclecert");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%l] %v");
    });
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("CYCLECERT_LOG")) level = spdlog::level::from_str(env);
    spdlog::set_level(level);
}

std::string case_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

Network load(const RunConfig& cfg, const std::string& path) {
    LosslessOptions opts;
    opts.voltage = cfg.voltage;
    opts.slack_bus = cfg.slack_bus;
    return losslessify(read_case_file(path), opts);
}

CertifyOptions certify_options(const RunConfig& cfg) {
    CertifyOptions opts;
    opts.basis_search = cfg.basis_search;
    opts.box_policy = cfg.box_policy;
    opts.scale_grid = cfg.box_scale_grid;
    opts.recover_solution = cfg.recover_solution;
    return opts;
}

Json config_json(const RunConfig& cfg) {
    Json grid = Json::array();
    for (double t : cfg.box_scale_grid) grid.push_back(t);
    return {{"command", to_string(cfg.command)},
            {"inputs", cfg.inputs},
            {"voltage", cfg.voltage == VoltagePolicy::Flat ? "flat" : "case"},
            {"slackBus", cfg.slack_bus ? Json(*cfg.slack_bus) : Json(nullptr)},
            {"basisSearch", to_string(cfg.basis_search)},
            {"boxPolicy", to_string(cfg.box_policy)},
            {"boxScaleGrid", std::move(grid)},
            {"tol", cfg.tol},
            {"yMax", cfg.y_max},
            {"format", to_string(*cfg.format)},
            {"recoverSolution", cfg.recover_solution},
            {"seed", cfg.seed}};
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void attach_meta(Json& report, const RunConfig& cfg, double seconds) {
    if (cfg.no_meta) return;
    report["meta"] = {{"generatedAt", utc_now()}, {"wallTime", seconds}};
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_single_input(const RunConfig& cfg) {
    if (cfg.inputs.size() != 1) throw ValidationError(to_string(cfg.command) + " takes exactly one input file");
}

[[noreturn]] void unsupported_format(const RunConfig& cfg) {
    throw ValidationError("format " + to_string(*cfg.format) + " is not available for " + to_string(cfg.command));
}

// ---------------------------------------------------------------------------

int run_certify(const RunConfig& cfg, std::ostream& out) {
    require_single_input(cfg);
    const auto start = std::chrono::steady_clock::now();
    const Certifier certifier(load(cfg, cfg.inputs[0]), certify_options(cfg));
    const Certificate cert = certifier.certify();
    const double seconds = elapsed(start);

    switch (*cfg.format) {
        case OutputFormat::Json: {
            Json report;
            report["case"] = case_name(cfg.inputs[0]);
            report["certificate"] = certificate_json(cert, certifier);
            report["config"] = config_json(cfg);
            attach_meta(report, cfg, seconds);
            out << report.dump(2) << "\n";
            break;
        }
        case OutputFormat::Csv:
            out << "case,verdict,reason,margin,boxPolicy,boxScale,zInf,lambda2\n";
            out << fmt::format("{},{},{},{:.9g},{},{:.6g},{:.9g},{:.9g}\n", case_name(cfg.inputs[0]),
                               to_string(cert.verdict), to_string(cert.reason), cert.margin,
                               to_string(cert.provenance.box_policy), cert.box.scale, cert.diagnostics.z_inf,
                               cert.diagnostics.lambda2);
            break;
        case OutputFormat::Text:
            out << fmt::format("{}: {}", case_name(cfg.inputs[0]), to_string(cert.verdict));
            if (!cert.certified()) out << " (" << to_string(cert.reason) << ")";
            out << "\n";
            out << fmt::format("  q = {}, bridges = {}, |z0|_inf = {:.6f}, lambda2 = {:.6f}\n",
                               certifier.basis().q(), certifier.decomposition().bridges.size(),
                               cert.diagnostics.z_inf, cert.diagnostics.lambda2);
            out << fmt::format("  box policy = {}, scale = {:.6g}, margin = {:.6e}\n",
                               to_string(cert.provenance.box_policy), cert.box.scale, cert.margin);
            if (cert.theta) {
                out << fmt::format("  recovered angles: max branch angle {:.6f} rad, residual {:.3e}\n",
                                   cert.theta->max_angle_diff, cert.theta->residual);
            }
            if (cert.recovery_error) out << "  recovery failed: " << *cert.recovery_error << "\n";
            break;
    }
    if (!cert.certified()) return kExitInconclusive;
    if (cfg.recover_solution && !cert.theta) return kExitInconclusive;
    return kExitOk;
}

int run_nr(const RunConfig& cfg, std::ostream& out) {
    require_single_input(cfg);
    const auto start = std::chrono::steady_clock::now();
    const Network net = load(cfg, cfg.inputs[0]);
    const NRResult res = nr_solve(net);
    const BaselineDiagnostics diag = diagnostics(net);
    const double seconds = elapsed(start);

    switch (*cfg.format) {
        case OutputFormat::Json: {
            Json report;
            report["case"] = case_name(cfg.inputs[0]);
            report["nr"] = nr_json(res, net);
            report["diagnostics"] = {{"zInfNorm", diag.z_inf_norm}, {"lambda2", diag.lambda2}};
            report["config"] = config_json(cfg);
            attach_meta(report, cfg, seconds);
            out << report.dump(2) << "\n";
            break;
        }
        case OutputFormat::Csv:
            out << "case,converged,success,iterations,finalResidual,maxAngleDiff,zInfNorm,lambda2\n";
            out << fmt::format("{},{},{},{},{:.6e},{:.9g},{:.9g},{:.9g}\n", case_name(cfg.inputs[0]),
                               res.converged, res.success, res.iterations, res.final_residual,
                               res.max_angle_diff, diag.z_inf_norm, diag.lambda2);
            break;
        case OutputFormat::Text:
            out << fmt::format("{}: NR {} in {} iterations, residual {:.3e}, max branch angle {:.6f} rad\n",
                               case_name(cfg.inputs[0]), res.success ? "converged" : "failed", res.iterations,
                               res.final_residual, res.max_angle_diff);
            if (!res.message.empty()) out << "  " << res.message << "\n";
            out << fmt::format("  |z0|_inf = {:.6f}, lambda2 = {:.6f}\n", diag.z_inf_norm, diag.lambda2);
            break;
    }
    return res.success ? kExitOk : kExitInconclusive;
}

int run_topo(const RunConfig& cfg, std::ostream& out) {
    require_single_input(cfg);
    const Certifier certifier(load(cfg, cfg.inputs[0]), certify_options(cfg));
    switch (*cfg.format) {
        case OutputFormat::Json: {
            Json report;
            report["case"] = case_name(cfg.inputs[0]);
            report["topology"] = topology_json(certifier);
            report["config"] = config_json(cfg);
            out << report.dump(2) << "\n";
            break;
        }
        case OutputFormat::Text: {
            const Network& net = certifier.network();
            const auto& decomp = certifier.decomposition();
            out << fmt::format("buses {}, branches {}, bridges {}, q {}\n", net.n(), net.m(), decomp.bridges.size(),
                               certifier.basis().q());
            for (int e : decomp.bridges) {
                const Edge& edge = certifier.incidence().edges[e];
                out << fmt::format("bridge ({},{})\n", net.bus_ids[edge.source], net.bus_ids[edge.sink]);
            }
            for (std::size_t c = 0; c < decomp.components.size(); ++c) {
                std::vector<int> ids;
                for (int v : decomp.components[c].nodes) ids.push_back(net.bus_ids[v]);
                out << fmt::format("component {}: buses [{}], {} branches\n", c, fmt::join(ids, " "),
                                   decomp.components[c].edges.size());
            }
            out << to_dot(certifier.incidence(), certifier.basis(), net.bus_ids);
            break;
        }
        case OutputFormat::Csv:
            unsupported_format(cfg);
    }
    return kExitOk;
}

struct SweepJob {
    std::string name;
    SweepResult result;
    double seconds = 0.0;
    std::string error;
};

int run_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.inputs.empty()) throw ValidationError("sweep needs at least one input file");
    SweepOptions sopts;
    sopts.y_max = cfg.y_max;
    sopts.tol = cfg.tol;
    CertifyOptions copts = certify_options(cfg);
    copts.recover_solution = true;

    std::vector<SweepJob> jobs(cfg.inputs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            SweepJob& job = jobs[i];
            job.name = case_name(cfg.inputs[i]);
            const auto start = std::chrono::steady_clock::now();
            try {
                job.result = stress_sweep(load(cfg, cfg.inputs[i]), copts, sopts);
            } catch (const std::exception& e) {
                job.error = cfg.inputs[i] + ": " + e.what();
            }
            job.seconds = elapsed(start);
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min<std::size_t>(jobs.size(), cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& job : jobs) {
        if (!job.error.empty()) {
            err << "error: " << job.error << "\n";
            return kExitInputError;
        }
    }

    switch (*cfg.format) {
        case OutputFormat::Csv:
            out << sweep_csv_header() << "\n";
            for (const auto& job : jobs) {
                out << sweep_csv_row(job.name, job.result, cfg.basis_search, cfg.box_policy,
                                     cfg.no_meta ? "" : fmt::format("{:.3f}", job.seconds))
                    << "\n";
            }
            break;
        case OutputFormat::Json: {
            Json report;
            Json cases = Json::array();
            for (const auto& job : jobs) {
                Json c = {{"case", job.name}};
                c.update(sweep_json(job.result));
                if (!cfg.no_meta) c["wallTime"] = job.seconds;
                cases.push_back(std::move(c));
            }
            report["cases"] = std::move(cases);
            report["config"] = config_json(cfg);
            double total = 0.0;
            for (const auto& job : jobs) total += job.seconds;
            attach_meta(report, cfg, total);
            out << report.dump(2) << "\n";
            break;
        }
        case OutputFormat::Text:
            out << fmt::format("{:<16} {:>10} {:>10} {:>24}\n", "Case", "y_cert", "y_NR", "Certified stress ratio");
            for (const auto& job : jobs) {
                out << fmt::format("{:<16} {:>10.4f} {:>10.4f} {:>23.2f}%\n", job.name, job.result.y_cert,
                                   job.result.y_nr, 100.0 * job.result.eta);
            }
            break;
    }

    int code = kExitOk;
    for (const auto& job : jobs) {
        for (const auto& w : job.result.warnings) err << "warning: " << job.name << ": " << w << "\n";
        if (job.result.sufficiency_violations > 0 || job.result.y_nr == 0.0) code = kExitInconclusive;
    }
    return code;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    init_logging();
    RunConfig cfg = config;
    if (!cfg.format) cfg.format = cfg.command == Command::Sweep ? OutputFormat::Csv : OutputFormat::Json;
    try {
        switch (cfg.command) {
            case Command::Certify: return run_certify(cfg, out);
            case Command::Sweep: return run_sweep(cfg, out, err);
            case Command::Topo: return run_topo(cfg, out);
            case Command::Nr: return run_nr(cfg, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

std::string to_string(Command c) {
    switch (c) {
        case Command::Certify: return "certify";
        case Command::Sweep: return "sweep";
        case Command::Topo: return "topo";
        case Command::Nr: return "nr";
    }
    return "unknown";
}

std::string to_string(OutputFormat f) {
    switch (f) {
        case OutputFormat::Json: return "json";
        case OutputFormat::Csv: return "csv";
        case OutputFormat::Text: return "text";
    }
    return "unknown";
}

}  // namespace cyclecert
