#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "cyclecert/cli.hpp"

using namespace cyclecert;

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Cycle-space solvability certificates for lossless power flow"};

    const std::map<std::string, Command> commands{
        {"certify", Command::Certify}, {"sweep", Command::Sweep}, {"topo", Command::Topo}, {"nr", Command::Nr}};
    const std::map<std::string, VoltagePolicy> voltages{{"flat", VoltagePolicy::Flat}, {"case", VoltagePolicy::Case}};
    const std::map<std::string, BasisSearch> searches{
        {"none", BasisSearch::None}, {"roots", BasisSearch::Roots}, {"coupling", BasisSearch::Coupling}};
    const std::map<std::string, BoxPolicy> boxes{
        {"slack-share", BoxPolicy::SlackShare}, {"dominance", BoxPolicy::Dominance}, {"auto", BoxPolicy::Auto}};
    const std::map<std::string, OutputFormat> formats{
        {"json", OutputFormat::Json}, {"csv", OutputFormat::Csv}, {"text", OutputFormat::Text}};

    app.add_option("command", cfg.command, "certify | sweep | topo | nr")
        ->required()
        ->transform(CLI::CheckedTransformer(commands))
        ->option_text("TEXT REQUIRED");
    app.add_option("inputs", cfg.inputs, "MATPOWER .m or JSON case files")->required();

    app.add_option("--voltage", cfg.voltage, "Bus voltage magnitudes: flat or case")
        ->transform(CLI::CheckedTransformer(voltages))
        ->option_text("TEXT");
    app.add_option("--slack-bus", cfg.slack_bus, "Bus id absorbing the injection mismatch (default: uniform projection)");
    app.add_option("--basis-search", cfg.basis_search, "Cycle basis selection: none, roots or coupling")
        ->transform(CLI::CheckedTransformer(searches))
        ->option_text("TEXT");
    app.add_option("--box-policy", cfg.box_policy, "Box widths: auto, dominance or slack-share")
        ->transform(CLI::CheckedTransformer(boxes))
        ->option_text("TEXT");
    app.add_option("--box-scale-grid", cfg.box_scale_grid, "Comma-separated box scales in (0, 1], tried in order")
        ->delimiter(',');
    app.add_option("--tol", cfg.tol, "Relative bisection tolerance for sweep margins");
    app.add_option("--ymax", cfg.y_max, "Upper end of the load-scaling sweep");
    app.add_option("--format", cfg.format, "json, csv or text (default: csv for sweep, json otherwise)")
        ->transform(CLI::CheckedTransformer(formats))
        ->option_text("TEXT");
    app.add_flag("--recover-solution", cfg.recover_solution, "Locate the root and attach bus angles to certificates");
    app.add_flag("--no-meta", cfg.no_meta, "Omit timestamps and timings for byte-stable reports");
    app.add_option("--seed", cfg.seed, "Seed echoed into the report");
    app.add_option("--threads", cfg.threads, "Sweep worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }
    return run(cfg, std::cout, std::cerr);
}
