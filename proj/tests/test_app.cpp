#include <doctest.h>

#include <loopchain/app.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace loopchain;
namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
    const std::string cmd = std::string(LOOPCHAIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("loopchain_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("exit codes") {
    const auto dir = scratch("exit");
    CHECK(cli("bounds --output_dir " + dir.string()) == exit_ok);
    CHECK(cli("bounds --output_dir " + (dir / "missing").string()) == exit_runtime);
    CHECK(cli("bounds --colour red") == exit_usage);
    CHECK(cli("simulate --beta 0 --output_dir " + dir.string()) == exit_usage);
    CHECK(cli("frobnicate") == exit_usage);
    CHECK(cli("simulate --config " + (dir / "nope.cfg").string()) == exit_runtime);
    CHECK(cli("--help") == exit_ok);

    RunConfig c = load_config("command = verify\nprofile = quick");
    c.output_dir = (dir / "missing").string();
    std::ostringstream log, err;
    CHECK(run_command(c, log, err) == exit_runtime);
    CHECK(err.str().find("filesystem error") != std::string::npos);
}

TEST_CASE("bounds output reruns identically from its embedded config") {
    const auto a = scratch("bounds_a");
    const auto b = scratch("bounds_b");
    REQUIRE(cli("bounds --S_grid 7:41:0.5 --format both --output_dir " + a.string()) == exit_ok);
    const auto csv = slurp(a / "bounds.csv");
    CHECK(csv.find("7.5,16,divergent") != std::string::npos);
    REQUIRE(cli("bounds --config " + (a / "bounds.json").string() + " --output_dir " + b.string() + " --format both") == exit_ok);
    CHECK(slurp(b / "bounds.csv").substr(csv.find("\nS,")) == csv.substr(csv.find("\nS,")));
}

TEST_CASE("simulate output reruns bit for bit from its embedded config") {
    const auto a = scratch("sim_a");
    REQUIRE(cli("simulate --ell 2 --beta 1 --n 8 --twice_S 2 --n_sweeps 3000 --n_burnin 100 --chains 2 --seed 77 "
                "--trace true --format both --output_dir " + a.string()) == exit_ok);
    const auto first = slurp(a / "simulate.csv");
    CHECK(first.find("observable,mean,error,tau_int,count") != std::string::npos);
    CHECK(first.find("#! seed = 77") != std::string::npos);
    CHECK(fs::exists(a / "trace.csv"));
    // rerun into the same directory from the CSV header
    fs::copy_file(a / "simulate.csv", a / "first.csv");
    REQUIRE(cli("simulate --config " + (a / "first.csv").string()) == exit_ok);
    CHECK(slurp(a / "simulate.csv") == first);
}

TEST_CASE("enumerate, ed and contours write their files") {
    const auto dir = scratch("exact");
    const std::string out = " --format both --output_dir " + dir.string();
    CHECK(cli("enumerate --ell 1 --beta 1 --n 4 --events 'conn(0,1);empty;no_winding'" + out) == exit_ok);
    const auto j = json::parse(slurp(dir / "enumerate.json"));
    CHECK(j["method"] == "dfs");
    CHECK(j["event_probabilities"].contains("connected(0,1)"));
    CHECK(cli("enumerate --ell 2 --beta 1 --n 16 --method transfer --events 'conn(0,1)'" + out) == exit_ok);
    CHECK(cli("enumerate --ell 2 --beta 1 --n 16 --method transfer --events 'omega_any'" + out) == exit_runtime);
    CHECK(cli("ed --ell 2 --twice_S 2" + out) == exit_ok);
    CHECK(fs::exists(dir / "ed_spectrum.csv"));
    CHECK(fs::exists(dir / "ed_correlations.csv"));
    CHECK(cli("contours --ell 2 --beta 2 --n 4 --twice_S 8 --init dimer --n_sweeps 400 --n_burnin 100" + out) == exit_ok);
    CHECK(fs::exists(dir / "contours.csv"));
}

TEST_CASE("corrupted projector is named") {
    const auto r = check_operator_identities("singlet-projector");
    CHECK(!r.passed);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0] == "polynomial-identity-S=1");
    CHECK(check_operator_identities().passed);
}

TEST_CASE("event list parsing") {
    const ChainGeometry g(2);
    const TimeGrid t(2, 4);
    const auto ev = parse_events(" conn(0, 1); surround(-1);omega(-2); omega_any;no_winding;empty; ", g, t);
    REQUIRE(ev.size() == 6);
    CHECK(ev[0].name() == "connected(0,1)");
    CHECK_THROWS_AS(parse_events("conn(0)", g, t), Error);
    CHECK_THROWS_AS(parse_events("omega(2)", g, t), Error);
    CHECK_THROWS_AS(parse_events("conn(0,9)", g, t), Error);
    CHECK(parse_events("", g, t).empty());
}
