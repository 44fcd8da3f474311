#include <iostream>

#include <CLI11.hpp>

#include "balsplit/errors.hpp"
#include "scenario.hpp"

using namespace balsplit;

int main(int argc, char** argv) {
    CLI::App app{"Fractional-step front tracking for balance laws with nonlocal sources"};
    app.require_subcommand(1);

    std::string scenario_path;
    cli::RunOptions run_opts;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "Run every diagnostic of a scenario file");
    run->add_option("scenario", scenario_path, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory (overrides the scenario and BALSPLIT_OUTPUT_DIR)");
    run->add_option("--jobs", run_opts.jobs, "Worker threads; 0 uses all cores")->check(CLI::NonNegativeNumber);

    std::string what;
    auto* list = app.add_subcommand("list", "List registered models, diagnostics or presets");
    list->add_option("what", what, "models | diagnostics | presets")
        ->required()
        ->check(CLI::IsMember({"models", "diagnostics", "presets"}));

    std::string id;
    auto* desc = app.add_subcommand("describe", "Describe a model, diagnostic or preset");
    desc->add_option("id", id, "Registered id")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (!out_dir.empty()) run_opts.out = out_dir;
            cli::Scenario sc = cli::load_scenario(scenario_path);
            return cli::run_scenario(sc, run_opts, std::cout);
        }
        if (*list) {
            if (what == "models")
                for (const auto& m : registered_models()) std::cout << m.id << "  " << m.summary << "\n";
            else
                for (const auto& d : what == "diagnostics" ? cli::registered_diagnostics() : cli::registered_presets())
                    std::cout << d.kind << "  " << d.summary << "\n";
            return cli::kOk;
        }
        if (*desc) {
            std::cout << cli::describe(id);
            return cli::kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kConfigError;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return cli::kIoError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return cli::kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kRuntimeError;
    }
    return cli::kOk;
}
