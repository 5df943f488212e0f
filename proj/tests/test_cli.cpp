#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cyclecert/cli.hpp"

using namespace cyclecert;
namespace fs = std::filesystem;

namespace {

const std::string kData = CYCLECERT_DATA_DIR;
const std::string kCli = CYCLECERT_CLI;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_config(RunConfig cfg) {
    std::ostringstream out, err;
    const int code = run(cfg, out, err);
    return {code, out.str(), err.str()};
}

RunConfig config(Command cmd, std::string input) {
    RunConfig cfg;
    cfg.command = cmd;
    cfg.inputs = {std::move(input)};
    cfg.no_meta = true;
    return cfg;
}

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "cyclecert_cli_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << content;
    return p;
}

// Exit status of the built binary; stdout goes to `capture` when given.
int shell(const std::string& args, const fs::path& capture = {}) {
    std::string cmd = "\"" + kCli + "\" " + args;
    cmd += capture.empty() ? " > /dev/null" : " > \"" + capture.string() + "\"";
    cmd += " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kOverloadedTree = R"({"buses": [{"id": 1}, {"id": 2}], "branches": [{"from": 1, "to": 2, "x": 0.2}],
 "injections": [{"id": 1, "p": 6.0}, {"id": 2, "p": -6.0}]})";

}  // namespace

TEST_CASE("certify case9 at nominal load") {
    const Outcome o = run_config(config(Command::Certify, kData + "/case9.m"));
    CHECK(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["certificate"]["verdict"] == "Certified");
    CHECK(j["config"]["command"] == "certify");
    CHECK(j["config"]["basisSearch"] == "coupling");
    CHECK_FALSE(j.contains("meta"));
    CHECK(j["certificate"]["provenance"].contains("boxScale"));
    CHECK(j["certificate"]["provenance"]["cycles"].size() == 1);
}

TEST_CASE("topo case14 reports the bridge and q") {
    const Outcome o = run_config(config(Command::Topo, kData + "/case14.m"));
    CHECK(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out)["topology"];
    CHECK(j["bridges"] == nlohmann::json::parse("[[7, 8]]"));
    CHECK(j["q"] == 7);
    CHECK(j["dot"].get<std::string>().rfind("digraph", 0) == 0);

    RunConfig text = config(Command::Topo, kData + "/case14.m");
    text.format = OutputFormat::Text;
    const Outcome t = run_config(text);
    CHECK(t.out.find("bridge (7,8)") != std::string::npos);
    CHECK(t.out.find("q 7") != std::string::npos);
}

TEST_CASE("sweep case9 emits one CSV row with eta near 1") {
    RunConfig cfg = config(Command::Sweep, kData + "/case9.m");
    cfg.tol = 1e-3;
    const Outcome o = run_config(cfg);
    CHECK(o.code == kExitOk);
    std::istringstream lines(o.out);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK(header == "case,yCert,yNR,eta,basisPolicy,boxPolicy,wallTime");
    CHECK(row.rfind("case9,", 0) == 0);
    std::vector<std::string> cols;
    std::istringstream cells(row);
    for (std::string c; std::getline(cells, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() >= 6);
    CHECK(std::stod(cols[3]) >= 0.99);
}

TEST_CASE("multi-case sweep keeps input order") {
    RunConfig cfg = config(Command::Sweep, kData + "/case14.m");
    cfg.inputs.push_back(kData + "/case9.m");
    cfg.threads = 2;
    cfg.format = OutputFormat::Json;
    const Outcome o = run_config(cfg);
    CHECK(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    REQUIRE(j["cases"].size() == 2);
    CHECK(j["cases"][0]["case"] == "case14");
    CHECK(j["cases"][1]["case"] == "case9");

    cfg.format = OutputFormat::Text;
    CHECK(run_config(cfg).out.find("Certified stress ratio") != std::string::npos);
}

TEST_CASE("exit codes: inconclusive and non-converged are 2") {
    const fs::path tree = temp_file("overloaded.json", kOverloadedTree);
    const Outcome c = run_config(config(Command::Certify, tree.string()));
    CHECK(c.code == kExitInconclusive);
    CHECK(nlohmann::json::parse(c.out)["certificate"]["reason"] == "bridge overload");
    CHECK(run_config(config(Command::Nr, tree.string())).code == kExitInconclusive);
    CHECK(run_config(config(Command::Nr, kData + "/case14.m")).code == kExitOk);
}

TEST_CASE("exit codes: input errors are 1") {
    const Outcome missing = run_config(config(Command::Certify, kData + "/no_such_case.m"));
    CHECK(missing.code == kExitInputError);
    CHECK_FALSE(missing.err.empty());

    const fs::path bad = temp_file("bad.m", "mpc.bus = [\n 1 3 0;\n 2 1 x;\n];\nmpc.branch = [ 1 2 0 0.1; ];\n");
    const Outcome parse = run_config(config(Command::Certify, bad.string()));
    CHECK(parse.code == kExitInputError);
    CHECK(parse.err.find("line 3") != std::string::npos);

    RunConfig csv_topo = config(Command::Topo, kData + "/case9.m");
    csv_topo.format = OutputFormat::Csv;
    CHECK(run_config(csv_topo).code == kExitInputError);

    RunConfig none = config(Command::Certify, "");
    none.inputs.clear();
    CHECK(run_config(none).code == kExitInputError);
}

TEST_CASE("reports are byte-identical without metadata") {
    for (Command cmd : {Command::Certify, Command::Nr, Command::Topo, Command::Sweep}) {
        RunConfig cfg = config(cmd, kData + "/case14.m");
        cfg.recover_solution = true;
        cfg.format = OutputFormat::Json;
        CHECK(run_config(cfg).out == run_config(cfg).out);
    }
    RunConfig meta = config(Command::Certify, kData + "/case9.m");
    meta.no_meta = false;
    CHECK(nlohmann::json::parse(run_config(meta).out).contains("meta"));
}

TEST_CASE("binary: exit-code contract and determinism") {
    const fs::path tree = temp_file("overloaded_bin.json", kOverloadedTree);
    CHECK(shell("certify \"" + kData + "/case9.m\"") == 0);
    CHECK(shell("certify \"" + tree.string() + "\"") == 2);
    CHECK(shell("nr \"" + tree.string() + "\"") == 2);
    CHECK(shell("certify /nonexistent/case.m") == 1);
    CHECK(shell("certify \"" + kData + "/case9.m\" --voltage=sideways") == 1);
    CHECK(shell("frobnicate \"" + kData + "/case9.m\"") == 1);
    CHECK(shell("certify \"" + kData + "/case14.m\" --box-scale-grid=1,0.5,0.25 --basis-search=roots "
                "--box-policy=slack-share") == 2);

    const fs::path a = fs::temp_directory_path() / "cyclecert_cli_test" / "a.json";
    const fs::path b = fs::temp_directory_path() / "cyclecert_cli_test" / "b.json";
    const std::string args = "certify \"" + kData + "/case14.m\" --recover-solution --no-meta --seed=17";
    CHECK(shell(args, a) == 0);
    CHECK(shell(args, b) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(nlohmann::json::parse(slurp(a))["config"]["seed"] == 17);
    CHECK(nlohmann::json::parse(slurp(a))["certificate"].contains("theta"));
}
