// sideband_cli <command> [--config PATH] [--out DIR] [--seed N] [--format csv|json]

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sideband/config.hpp"
#include "sideband/io.hpp"
#include "sideband/pipeline.hpp"

using namespace sideband;

namespace {

int report_failure(const ErrorRecord& e, const std::filesystem::path& out_dir) {
    std::cerr << "error (" << e.type << "): " << e.message << '\n';
    try {
        write_json(out_dir / "error.json", e.to_json());
    } catch (const std::exception& x) {
        std::cerr << "could not write error record: " << x.what() << '\n';
    }
    std::cout << e.to_json().dump() << '\n';
    return e.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sideband cooling and thermometry toolkit"};
    std::string command, config_path, out_dir = "out", format = "csv";
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "spectrum|cool|tin|synth|dualhomodyne|fit|calibrate|thermometry")->required();
    app.add_option("--config", config_path, "experiment config (JSON); defaults when omitted");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "overrides synthesis.seed");
    app.add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return report_failure({"usage_error", e.what(), command, "", 2}, out_dir);
    }

    std::string hash;
    try {
        const Command cmd = parse_command(command);
        ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (seed) config.synthesis.seed = *seed;
        validate(config);
        hash = config_hash(config);
        PipelineOptions options{out_dir, parse_format(format)};
        const auto manifest = run_pipeline(config, cmd, options);
        std::cout << manifest.to_json().dump(2) << '\n';
        return 0;
    } catch (...) {
        auto rec = error_record(std::current_exception(), command, hash);
        if (rec.type == "usage_error") std::cerr << app.help();
        return report_failure(rec, out_dir);
    }
}
