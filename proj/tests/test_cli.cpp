#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "flowproc/errors.hpp"
#include "flowproc/report.hpp"

using namespace flowproc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string flowproc_bin() {
    const char* b = std::getenv("FLOWPROC_BIN");
    REQUIRE(b != nullptr);
    return b;
}

std::string config_dir() {
    const char* d = std::getenv("FLOWPROC_CONFIG_DIR");
    REQUIRE(d != nullptr);
    return d;
}

int run_cli(const std::string& args) {
    const std::string cmd = flowproc_bin() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

long line_count(const std::string& text) {
    long n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("full precision formatting round-trips") {
    const double vals[] = {0.0,   1.0,        1.0 / 3.0,       0.1,         -2.5e-11,
                           1e300, 5e-324,     3.014159265e-7,  -123456789.0, 0.6692336021,
                           2.0,   1e-9 + 1.0, 123456.789012345, -0.0};
    for (double v : vals) {
        const std::string s = format_full(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    // a value needing all 17 digits
    const double tricky = 0.1 + 0.2;
    CHECK(std::strtod(format_full(tricky).c_str(), nullptr) == tricky);
}

TEST_CASE("csv writer emits headers, LF endings and no temp residue") {
    const fs::path dir = "cli_scratch";
    fs::remove_all(dir);
    fs::create_directories(dir);

    Table empty;
    empty.header = {"a", "b"};
    write_csv((dir / "empty.csv").string(), empty);
    CHECK(slurp((dir / "empty.csv").string()) == "a,b\n");

    Table t;
    t.header = {"x", "y"};
    t.rows = {{1.5, -2.0}, {0.25, 1e-3}};
    write_csv((dir / "t.csv").string(), t);
    const std::string text = slurp((dir / "t.csv").string());
    CHECK(text.find('\r') == std::string::npos);
    CHECK(line_count(text) == 3);
    CHECK(text.substr(0, 4) == "x,y\n");

    // a second write replaces the file atomically
    write_csv((dir / "t.csv").string(), empty);
    CHECK(slurp((dir / "t.csv").string()) == "a,b\n");
    for (const auto& e : fs::directory_iterator(dir))
        CHECK(e.path().extension() != ".tmp");

    Table ragged;
    ragged.header = {"x", "y"};
    ragged.rows = {{1.0}};
    CHECK_THROWS_AS(write_csv((dir / "bad.csv").string(), ragged), IoError);
    fs::remove_all(dir);
}

TEST_CASE("particles runs are deterministic and overrides take effect") {
    const std::string cfg = config_dir() + "/particles.json";
    fs::remove_all("cli_out");
    CHECK(run_cli("particles --config " + cfg + " --replicates 40 --out cli_out/a") == 0);
    CHECK(run_cli("particles --config " + cfg + " --replicates 40 --out cli_out/b") == 0);

    const std::string a = slurp("cli_out/a/particles.csv");
    CHECK(a == slurp("cli_out/b/particles.csv"));
    CHECK(line_count(a) == 41);
    CHECK(a.substr(0, a.find('\n')) == "replicate,t,total_mass,functional");

    const json s = json::parse(slurp("cli_out/a/summary.json"));
    CHECK(s.at("schema_version") == 1);
    CHECK(s.at("command") == "particles");
    CHECK(s.at("config").at("mc").at("replicates") == 40);          // override echoed
    CHECK(s.at("config").at("output").at("dir") == "cli_out/a");    // override echoed
    CHECK(s.at("config").at("numerics").at("h") == 0.02);
    CHECK(s.at("total_mass").at("n") == 40);
    CHECK(s.contains("wall_seconds"));

    CHECK(run_cli("particles --config " + cfg + " --replicates 40 --seed 999 --out cli_out/c") ==
          0);
    CHECK(slurp("cli_out/c/particles.csv") != a);
    const json sc = json::parse(slurp("cli_out/c/summary.json"));
    CHECK(sc.at("seed") == 999);
}

TEST_CASE("bad invocations exit 1 and leave no output") {
    const std::string cfg = config_dir() + "/particles.json";
    fs::remove_all("cli_err");

    CHECK(run_cli("particles --config no_such_file.json --out cli_err/a") == 1);
    CHECK(!fs::exists("cli_err/a"));

    CHECK(run_cli("frobnicate --config " + cfg) == 1);
    CHECK(run_cli("particles") == 1);  // --config is required
    CHECK(run_cli("--help") == 0);

    fs::create_directories("cli_err");
    {
        std::ofstream bad("cli_err/bad_version.json");
        bad << "{\"version\": 2, \"model\": {\"sigma1\": [1.0], \"sigma2\": [1.0]}}";
    }
    CHECK(run_cli("particles --config cli_err/bad_version.json --out cli_err/b") == 1);
    CHECK(!fs::exists("cli_err/b"));

    {
        std::ofstream bad("cli_err/not_json.json");
        bad << "{ nope";
    }
    CHECK(run_cli("particles --config cli_err/not_json.json --out cli_err/c") == 1);
    CHECK(!fs::exists("cli_err/c"));

    // missing numerics block for this command: rejected before any write
    {
        std::ofstream bad("cli_err/no_numerics.json");
        bad << "{\"version\": 1, \"model\": {\"sigma1\": [1.0], \"sigma2\": [1.0]},"
            << " \"initial\": {\"atoms\": [{\"x\": 0.0}]}}";
    }
    CHECK(run_cli("particles --config cli_err/no_numerics.json --out cli_err/d") == 1);
    CHECK(!fs::exists("cli_err/d"));
    fs::remove_all("cli_err");
}

TEST_CASE("snake, spde, loglaplace and duality emit their tables") {
    fs::remove_all("cli_mod");

    CHECK(run_cli("snake --config " + config_dir() + "/snake.json --replicates 12 --out cli_mod/snake") == 0);
    const std::string sn = slurp("cli_mod/snake/snake.csv");
    CHECK(line_count(sn) == 1 + 12 * 2);  // two levels per replicate
    CHECK(sn.substr(0, sn.find('\n')) == "replicate,level,excursions,mass,diameter");
    CHECK(fs::exists("cli_mod/snake/atoms.csv"));
    const json sj = json::parse(slurp("cli_mod/snake/summary.json"));
    CHECK(sj.at("levels").size() == 2);

    CHECK(run_cli("spde --config " + config_dir() + "/spde.json --replicates 6 --out cli_mod/spde") == 0);
    CHECK(line_count(slurp("cli_mod/spde/masses.csv")) == 7);
    const std::string snap = slurp("cli_mod/spde/snapshots.csv");
    CHECK(snap.substr(0, snap.find('\n')) == "t,x,value");
    CHECK(line_count(snap) == 1 + 3 * 120);  // three times, 120 cells
    CHECK(line_count(slurp("cli_mod/spde/series.csv")) == 1 + 6 * 301);

    CHECK(run_cli("loglaplace --config " + config_dir() + "/loglaplace.json --replicates 3 --out cli_mod/lap") == 0);
    CHECK(line_count(slurp("cli_mod/lap/laplace.csv")) == 4);
    CHECK(line_count(slurp("cli_mod/lap/y0.csv")) == 1 + 400);

    CHECK(run_cli("duality --config " + config_dir() + "/duality.json --replicates 400 --out cli_mod/dual") == 0);
    const json dj = json::parse(slurp("cli_mod/dual/summary.json"));
    // constant data, so the estimate sits near the exact pair value 1 + t
    CHECK(dj.at("exact_rate_one").get<double>() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(dj.at("estimate").get<double>() - 2.0) < 0.5);
    CHECK(line_count(slurp("cli_mod/dual/duality.csv")) == 2);
    fs::remove_all("cli_mod");
}

TEST_CASE("verify-all passes at desk scale and fails with collapsed bands") {
    fs::remove_all("cli_verify");
    CHECK(run_cli("verify-all --config " + config_dir() + "/verify_all.json --replicates 64 --out cli_verify/ok") == 0);
    const json ok = json::parse(slurp("cli_verify/ok/summary.json"));
    CHECK(ok.at("all_passed") == true);
    CHECK(ok.at("checks").size() >= 8);
    const std::string table = slurp("cli_verify/ok/checks.csv");
    CHECK(table.substr(0, table.find('\n')) == "name,value,target,lo,hi,passed");

    CHECK(run_cli("verify-all --config " + config_dir() + "/verify_fail.json --out cli_verify/bad") == 2);
    // the report is still written before the failure propagates
    const json bad = json::parse(slurp("cli_verify/bad/summary.json"));
    CHECK(bad.at("all_passed") == false);
    CHECK(fs::exists("cli_verify/bad/checks.csv"));
    fs::remove_all("cli_verify");
}
