#include "qrep/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

using namespace qrep;

namespace {

std::filesystem::path scratch_path(const char* tag) {
    static const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    static int counter = 0;
    return std::filesystem::temp_directory_path() /
           ("qrep_clitest_" + std::to_string(stamp) + "_" + std::to_string(++counter) + "_" +
            tag + ".csv");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Csv {
    std::string provenance;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    double num(std::size_t row, const std::string& column) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == column) return std::stod(rows.at(row).at(c));
        throw std::out_of_range("no column " + column);
    }
    const std::string& cell(std::size_t row, const std::string& column) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == column) return rows.at(row).at(c);
        throw std::out_of_range("no column " + column);
    }
};

Csv parse_csv(const std::string& body) {
    Csv out;
    std::stringstream ss(body);
    for (std::string line; std::getline(ss, line);) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (out.provenance.empty()) out.provenance = line;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (out.columns.empty())
            out.columns = cells;
        else
            out.rows.push_back(cells);
    }
    return out;
}

// run a subcommand writing to a throwaway file and parse what came back
std::pair<int, Csv> run_csv(std::vector<std::string> args, const char* tag) {
    const auto path = scratch_path(tag);
    args.push_back("--out");
    args.push_back(path.string());
    const int rc = cli::run_command(args);
    Csv csv = parse_csv(slurp(path));
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return {rc, csv};
}

}  // namespace

TEST_CASE("grid syntax expands inclusively") {
    auto g = cli::parse_values("0:200:5");
    REQUIRE(g.size() == 41);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 200.0);

    g = cli::parse_values("0:1:0.3");
    REQUIRE(g.size() == 4);
    CHECK(g.back() == doctest::Approx(0.9));

    // an endpoint within half a step counts as on the grid
    g = cli::parse_values("0:1:0.25");
    REQUIRE(g.size() == 5);
    CHECK(g.back() == 1.0);

    g = cli::parse_values("1,0.5, 3");
    REQUIRE(g.size() == 3);
    CHECK(g[1] == 0.5);

    g = cli::parse_values("2.5");
    REQUIRE(g.size() == 1);
    CHECK(g[0] == 2.5);

    const auto ints = cli::parse_int_values("3:9:2");
    REQUIRE(ints.size() == 4);
    CHECK(ints == std::vector<int>{3, 5, 7, 9});
}

TEST_CASE("malformed value lists are rejected") {
    CHECK_THROWS_AS(cli::parse_values(""), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_values("1,,2"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_values("a"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_values("0:1:0"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_values("5:1:1"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_values("1:2"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_int_values("1.5"), std::invalid_argument);
}

TEST_CASE("config text honors comments and duplicate keys") {
    const auto kv = cli::parse_config_text(
        "# leading comment\n"
        "alpha_sq = 2   # trailing comment\n"
        "\n"
        "ell_km = 10\n"
        "ell_km = 25\n");
    CHECK(kv.at("alpha_sq") == "2");
    CHECK(kv.at("ell_km") == "25");
    CHECK_THROWS_AS(cli::parse_config_text("alpha_sq 2\n"), std::invalid_argument);
}

TEST_CASE("number formatting and hashing are stable") {
    CHECK(cli::format_double(0.5) == "0.5");
    CHECK(cli::format_double(8.0 / 3.0) == "2.66666666667");
    CHECK(cli::format_double(200.0) == "200");
    // reference vectors for 64-bit FNV-1a
    CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("usage and configuration errors exit with code 1") {
    CHECK(cli::run_command({}) == 1);
    CHECK(cli::run_command({"nonsense"}) == 1);
    CHECK(cli::run_command({"fig2", "--bogus", "1"}) == 1);
    CHECK(cli::run_command({"fig2", "--ell", "5:1:1"}) == 1);
    CHECK(cli::run_command({"fig2", "--alpha-sq", "-1"}) == 1);
    CHECK(cli::run_command({"fig2", "--config", "/nonexistent/qrep.conf"}) == 1);

    const auto conf = scratch_path("badkey");
    std::ofstream(conf) << "bogus_key = 3\n";
    CHECK(cli::run_command({"fig2", "--config", conf.string()}) == 1);
    std::error_code ec;
    std::filesystem::remove(conf, ec);
}

TEST_CASE("fig2 output carries provenance and is byte-stable") {
    const std::vector<std::string> args = {"fig2", "--alpha-sq", "1", "--ell", "0,25"};
    auto [rc1, csv] = run_csv(args, "fig2a");
    REQUIRE(rc1 == 0);
    CHECK(csv.provenance.rfind("# qrepsim 0.1.0 config_hash=0x", 0) == 0);
    CHECK(csv.provenance.find(" seed=1") != std::string::npos);
    REQUIRE(csv.columns ==
            std::vector<std::string>{"alpha_sq", "ell_km", "f", "F1", "F2", "F4", "F_S", "P_pd"});
    REQUIRE(csv.rows.size() == 2);

    // lossless channel: perfect pairs, and the pass probability collapses to
    // five consecutive conclusive detections
    CHECK(csv.num(0, "ell_km") == 0.0);
    CHECK(csv.num(0, "f") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(csv.num(0, "P_pd") ==
          doctest::Approx(std::pow(1.0 - std::exp(-2.0), 5)).epsilon(1e-9));
    CHECK(csv.num(1, "F4") > csv.num(1, "F2"));
    CHECK(csv.num(1, "F2") > csv.num(1, "F1"));
    CHECK(csv.num(1, "F1") > csv.num(1, "f"));

    const auto pa = scratch_path("fig2b"), pb = scratch_path("fig2c");
    auto with_out = [&](const std::filesystem::path& p) {
        auto a = args;
        a.push_back("--out");
        a.push_back(p.string());
        return a;
    };
    REQUIRE(cli::run_command(with_out(pa)) == 0);
    REQUIRE(cli::run_command(with_out(pb)) == 0);
    const std::string ba = slurp(pa), bb = slurp(pb);
    std::error_code ec;
    std::filesystem::remove(pa, ec);
    std::filesystem::remove(pb, ec);
    CHECK(!ba.empty());
    CHECK(ba == bb);
}

TEST_CASE("command-line flags override config file values") {
    const auto conf = scratch_path("conf");
    std::ofstream(conf) << "alpha_sq = 2\nell_km = 0,25,50\nseed = 7\n";

    auto [rc, csv] = run_csv({"fig2", "--config", conf.string(), "--ell", "25"}, "confrun");
    REQUIRE(rc == 0);
    REQUIRE(csv.rows.size() == 1);  // the flag replaced the file's three lengths
    CHECK(csv.num(0, "alpha_sq") == 2.0);
    CHECK(csv.num(0, "ell_km") == 25.0);
    CHECK(csv.provenance.find(" seed=7") != std::string::npos);

    // same file through the environment fallback
    setenv("QREP_CONFIG", conf.string().c_str(), 1);
    auto [rc2, csv2] = run_csv({"fig2", "--ell", "25"}, "envrun");
    unsetenv("QREP_CONFIG");
    REQUIRE(rc2 == 0);
    REQUIRE(csv2.rows.size() == 1);
    CHECK(csv2.num(0, "alpha_sq") == 2.0);

    std::error_code ec;
    std::filesystem::remove(conf, ec);
}

TEST_CASE("distribute cross-checks stay quiet on a small grid") {
    auto [rc, csv] = run_csv({"distribute", "--alpha-sq", "1", "--ell", "0,25"}, "dist");
    REQUIRE(rc == 0);
    REQUIRE(csv.rows.size() == 2);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        CHECK(csv.num(r, "delta_closed_form") < 1e-8);
        CHECK(csv.num(r, "delta_engines") < 1e-8);
    }
    CHECK(csv.num(1, "p_dist") == doctest::Approx(0.26042914560599234).epsilon(1e-12));
}

TEST_CASE("purify reproduces the analytic pumping sequence") {
    auto [rc, csv] = run_csv({"purify", "--fidelity", "0.75", "--rounds", "4"}, "purify");
    REQUIRE(rc == 0);
    REQUIRE(csv.rows.size() == 4);
    CHECK(csv.num(3, "round") == 4.0);
    CHECK(csv.num(3, "fidelity") == doctest::Approx(243.0 / 244.0).epsilon(1e-11));
    // success probabilities shrink as more heralds must line up
    CHECK(csv.num(3, "p_purified") < csv.num(0, "p_purified"));
}

TEST_CASE("swap lists all sixteen outcomes at the closed-form fidelity") {
    auto [rc, csv] = run_csv({"swap", "--fidelity", "0.9"}, "swap");
    REQUIRE(rc == 0);
    REQUIRE(csv.rows.size() == 16);
    for (std::size_t r = 0; r < 16; ++r) {
        CHECK(csv.num(r, "probability") == doctest::Approx(1.0 / 16.0).epsilon(1e-11));
        CHECK(csv.num(r, "f_s") == doctest::Approx(0.756).epsilon(1e-11));
    }
    CHECK(csv.cell(0, "dominant").substr(0, 3) == "phi");
}

TEST_CASE("fig4 plans reach their targets and flag unreachable ones") {
    auto [rc, csv] =
        run_csv({"fig4", "--alpha-sq", "1", "--f-final", "0.8", "--segments", "3"}, "fig4");
    REQUIRE(rc == 0);
    REQUIRE(csv.rows.size() == 1);
    CHECK(csv.num(0, "ell_km") == doctest::Approx(30.9475).epsilon(1e-4));
    CHECK(csv.num(0, "L_km") == doctest::Approx(3 * csv.num(0, "ell_km")).epsilon(1e-12));
    CHECK(csv.num(0, "rate_rescaled") == doctest::Approx(0.416175).epsilon(1e-4));

    // below the infinite-length fidelity floor for this channel
    CHECK(cli::run_command({"fig4", "--alpha-sq", "1", "--f-final", "0.58", "--segments", "3"}) ==
          2);
}

TEST_CASE("montecarlo rows carry the exact expectation factors") {
    auto [rc, csv] = run_csv(
        {"montecarlo", "--segments", "2", "--p", "0.5", "--trials", "20000", "--seed", "1"},
        "mc");
    REQUIRE(rc == 0);
    bool found = false;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        if (csv.num(r, "segments") == 2.0 && csv.num(r, "p") == 0.5) {
            found = true;
            CHECK(csv.num(r, "z_analytic") == doctest::Approx(8.0 / 3.0).epsilon(1e-11));
            CHECK(csv.num(r, "deviation_sigmas") < 3.0);
        }
    }
    CHECK(found);
}

TEST_CASE("montecarlo flags a statistical fluke with exit code 3") {
    // seed chosen so the 3-sigma detector must trip on the one-segment row
    auto [rc, csv] = run_csv({"montecarlo", "--segments", "1", "--p", "0.5", "--trials", "100",
                              "--seed", "101"},
                             "mcfluke");
    CHECK(rc == 3);
    CHECK(!csv.rows.empty());  // the table is still written for inspection
}

TEST_CASE("verify-hamiltonians reports the dispersive sweep honestly") {
    auto [rc, csv] =
        run_csv({"verify-hamiltonians", "--mode", "displacement", "--ratio", "10"}, "vh");
    REQUIRE(rc == 0);
    REQUIRE(csv.rows.size() == 1);
    CHECK(csv.cell(0, "mode") == "displacement");
    CHECK(csv.num(0, "infidelity") == doctest::Approx(0.4446931).epsilon(1e-3));
    CHECK(csv.num(0, "leakage") < csv.num(0, "leakage_bound"));
    CHECK(csv.cell(0, "dispersive") == "1");
    CHECK(csv.cell(0, "regime_warning") == "1");  // the drive is not weak here
}

TEST_CASE("selftest passes end to end") {
    CHECK(cli::run_command({"selftest"}) == 0);
}
