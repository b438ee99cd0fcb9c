#include <loopchain/app.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw loopchain::FilesystemError("cannot read config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct Subcommand {
    CLI::App* app = nullptr;
    std::string config_file;
    std::map<std::string, std::string> values;
};

}  // namespace

int main(int argc, char** argv) {
    using namespace loopchain;
    CLI::App cli{"Random-loop simulator and verification suite for SU(2S+1) singlet-projector chains"};
    cli.set_version_flag("--version", std::string(kVersion));
    cli.require_subcommand(1);

    const std::map<std::string, std::string> descriptions = {
        {"simulate", "Monte Carlo run of the loop model"},
        {"enumerate", "exact enumeration of a small instance"},
        {"ed", "dense exact diagonalization"},
        {"contours", "per-sample contour census"},
        {"bounds", "closed-form bounds over an S grid"},
        {"verify", "run the acceptance suite"},
    };
    std::vector<Subcommand> subs;
    subs.reserve(commands().size());
    for (const auto& name : commands()) {
        auto& s = subs.emplace_back();
        s.app = cli.add_subcommand(name, descriptions.at(name));
        s.app->add_option("--config", s.config_file, "key = value file, or a previous result file");
        for (const auto& key : config_keys()) {
            if (key == "command") continue;
            s.app->add_option("--" + key, s.values[key], "overrides config key " + key);
        }
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    for (auto& s : subs) {
        if (!s.app->parsed()) continue;
        std::map<std::string, std::string> overrides;
        for (const auto& [key, value] : s.values) {
            if (s.app->count("--" + key) > 0) overrides[key] = value;
        }
        overrides["command"] = s.app->get_name();
        std::string text;
        try {
            if (!s.config_file.empty()) text = extract_config(read_file(s.config_file));
        } catch (const FilesystemError& e) {
            std::cerr << "filesystem error: " << e.what() << '\n';
            return exit_runtime;
        } catch (const Error& e) {
            std::cerr << e.what() << '\n';
            return exit_usage;
        }
        auto parsed = parse_config(text, overrides);
        if (!parsed.ok()) {
            for (const auto& e : parsed.errors) std::cerr << "config error: " << e << '\n';
            return exit_usage;
        }
        return run_command(parsed.config, std::cout, std::cerr);
    }
    return exit_usage;
}
