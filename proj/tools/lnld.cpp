#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "lnld/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Coupled local/nonlocal diffusion: simulation and verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    lnld::cli::CommandOptions opt;

    for (const char* name : {"simulate", "spectrum", "sweep-epsilon", "verify"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_flag("--svg", opt.svg, "also write SVG plots");
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--set", overrides, "key=value override, repeatable");
        if (std::string(name) == "verify")
            sub->add_flag("--corrupt-generator", opt.corrupt_generator, "test hook: zero one coupling entry")
                ->group("");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : lnld::cli::kConfigError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    lnld::SimConfig config;
    try {
        config = lnld::load_config(config_path);
        for (const auto& s : overrides) lnld::apply_override(config, s);
        if (!out_dir.empty()) config.output_dir = out_dir;
    } catch (const lnld::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return lnld::cli::kConfigError;
    }
    return lnld::cli::dispatch(command, config, opt, std::cerr);
}
