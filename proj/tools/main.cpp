#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdfool/cli.hpp"

namespace {

pdfool::RunConfig config_with_overrides(const std::string& config_path,
                                        const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (!config_path.empty()) {
        for (const auto& kv : pdfool::RunConfig::from_file(config_path).resolved()) pairs.push_back(kv);
    }
    for (const auto& kv : overrides)
        if (!kv.second.empty()) pairs.emplace_back(kv);
    return pdfool::RunConfig::from_pairs(pairs);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partial dependence explanations and the PD fooling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string manifest_path;
    std::string curves_path, ice_path, plot_name;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", config_path, "run configuration file (key=value lines)");
        if (config_required) opt->required();
        cmd->add_option("--out", out_dir, "output directory");
    };

    add_common(app.add_subcommand("simulate", "generate the correlated-Gaussian dataset"), true);
    add_common(app.add_subcommand("train", "train a predictor on the configured data"), true);
    add_common(app.add_subcommand("attack", "run the PD fooling pipeline over all folds"), true);
    add_common(app.add_subcommand("evaluate", "evaluate saved attack artifacts on a dataset"), true);
    add_common(app.add_subcommand("sweep", "threshold sweep: TPR versus accuracy of attack"), true);

    auto* plot = app.add_subcommand("plot", "render curve CSVs as a static SVG");
    add_common(plot, false);
    plot->add_option("--curves", curves_path, "curves CSV (feature,grid_value,series,value)");
    plot->add_option("--ice", ice_path, "optional ICE CSV in the same format");
    plot->add_option("--name", plot_name, "output file name");

    auto* rerun = app.add_subcommand("rerun", "re-execute a command from its manifest");
    rerun->add_option("--manifest", manifest_path, "manifest.txt of a previous run")->required();
    rerun->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (rerun->parsed()) {
            pdfool::cmd_rerun(manifest_path, out_dir);
            return 0;
        }
        const std::string command = app.get_subcommands().front()->get_name();
        std::vector<std::pair<std::string, std::string>> overrides;
        if (command == "plot") {
            overrides.emplace_back("plot.curves", curves_path);
            overrides.emplace_back("plot.ice", ice_path);
            overrides.emplace_back("plot.name", plot_name);
        }
        pdfool::run_command(command, config_with_overrides(config_path, overrides), out_dir);
        return 0;
    } catch (const pdfool::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const pdfool::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const pdfool::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
