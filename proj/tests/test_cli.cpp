// End-to-end tests for the frgp command-line tool: exit codes, artifact
// layout, determinism of data artifacts, manifest checksums, and the
// diagnostic suites.  The binary path is injected via FRGP_CLI_PATH.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <frgp/io.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() { return FRGP_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd = "\"" + cli_path() + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
#ifdef _WIN32
    return status;
#else
    if (status == -1) return -1;
    return WEXITSTATUS(status);
#endif
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::current_path() / ("cli_scratch_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// Trailing empty cells vanish (getline stops at the final delimiter), so a
// row whose last column is empty splits into one fewer cell than the header.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

// A fast fit configuration: SPDE backend, small data set, short chain.
std::string tiny_fit_config(unsigned seed) {
    json cfg = {
        {"schema_version", 1},
        {"seed", seed},
        {"method", "spde"},
        {"function", "f2"},
        {"n", 30},
        {"sigma_sq", 0.25},
        {"beta", 2},
        {"prior",
         {{"n", {{"support", {2, 4}}, {"rate", 0.3}}},
          {"kappa", {{"type", "discrete"}, {"values", {1.0, 3.0}}}}}},
        {"iterations", 60},
        {"burn_in", 20},
        {"query_points", 9},
    };
    return cfg.dump(2);
}

std::string tiny_scan_config(unsigned seed) {
    json cfg = {
        {"schema_version", 1},
        {"seed", seed},
        {"method", "gpi"},
        {"function", "f1"},
        {"n", 25},
        {"sigma_sq", 0.25},
        {"nu", 1.5},
        {"prior",
         {{"n", {{"support", {2, 3}}, {"rate", 0.3}}},
          {"kappa", {{"type", "gamma"}, {"shape", 3.0}, {"scale", 0.3333333333333333}}}}},
        {"iterations", 40},
        {"burn_in", 10},
        {"scan", {{"n_values", {2, 3}}, {"kappa_values", {1.0, 4.0}}}},
    };
    return cfg.dump(2);
}

std::string tiny_bench_config(unsigned seed) {
    json cfg = {
        {"schema_version", 1},
        {"seed", seed},
        {"method", "spde"},
        {"function", "f2"},
        {"n", 30},
        {"sigma_sq", 0.25},
        {"nu", 1.5},
        {"beta", 2},
        {"prior",
         {{"n", {{"support", {2, 4}}, {"rate", 0.3}}},
          {"kappa", {{"type", "discrete"}, {"values", {2.0}}}}}},
        {"iterations", 40},
        {"burn_in", 10},
        {"replications", 2},
        {"amse_grid", 10},
        {"bench",
         {{"runs",
           {{{"method", "spde"}, {"kappa_grid", {2.0}}},
            {{"method", "exact_gp"}, {"kappa_grid", {2.0}}}}},
          {"n_values", {30}}}},
    };
    return cfg.dump(2);
}

}  // namespace

TEST_CASE("help succeeds and bad invocations report usage errors") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("fit --help") == 0);
    CHECK(run_cli("") == 2);            // missing subcommand
    CHECK(run_cli("frobnicate") == 2);  // unknown subcommand
    CHECK(run_cli("fit") == 2);         // neither --config nor --preset
    CHECK(run_cli("fit --preset nonexistent-preset --out cli_scratch_unused") == 2);
}

TEST_CASE("config file validation fails closed") {
    fs::path dir = fresh_dir("badcfg");
    const std::string out = (dir / "out").string();

    write_text(dir / "malformed.json", "{ not json ");
    CHECK(run_cli("fit --config \"" + (dir / "malformed.json").string() + "\" --out \"" + out +
                  "\"") == 2);

    write_text(dir / "good.json", tiny_fit_config(1));
    CHECK(run_cli("fit --config \"" + (dir / "good.json").string() +
                  "\" --preset gpi-f1-n200 --out \"" + out + "\"") == 2);  // both sources

    json unknown = json::parse(tiny_fit_config(1));
    unknown["surprise"] = 7;
    write_text(dir / "unknown.json", unknown.dump());
    CHECK(run_cli("fit --config \"" + (dir / "unknown.json").string() + "\" --out \"" + out +
                  "\"") == 2);

    json wrong_version = json::parse(tiny_fit_config(1));
    wrong_version["schema_version"] = 2;
    write_text(dir / "version.json", wrong_version.dump());
    CHECK(run_cli("fit --config \"" + (dir / "version.json").string() + "\" --out \"" + out +
                  "\"") == 2);

    json no_prior = json::parse(tiny_fit_config(1));
    no_prior.erase("prior");
    write_text(dir / "noprior.json", no_prior.dump());
    CHECK(run_cli("fit --config \"" + (dir / "noprior.json").string() + "\" --out \"" + out +
                  "\"") == 2);

    // fit samples the hyperposterior; the exact-GP baseline has no
    // hyperprior chain and is rejected for this subcommand.
    json exact = json::parse(tiny_fit_config(1));
    exact["method"] = "exact_gp";
    exact["kappa_fixed"] = 2.0;
    write_text(dir / "exact.json", exact.dump());
    CHECK(run_cli("fit --config \"" + (dir / "exact.json").string() + "\" --out \"" + out +
                  "\"") == 2);

    fs::remove_all(dir);
}

TEST_CASE("fit writes chain, predictive summary, and a checksummed manifest") {
    fs::path dir = fresh_dir("fit");
    write_text(dir / "cfg.json", tiny_fit_config(31));
    const std::string cfg = (dir / "cfg.json").string();

    fs::path out_a = dir / "a";
    REQUIRE(run_cli("fit --config \"" + cfg + "\" --out \"" + out_a.string() + "\"") == 0);
    REQUIRE(fs::exists(out_a / "chain.csv"));
    REQUIRE(fs::exists(out_a / "predictive.csv"));
    REQUIRE(fs::exists(out_a / "manifest.json"));

    // 40 retained samples plus the header line.
    auto chain = read_lines(out_a / "chain.csv");
    CHECK(chain.size() == 41);
    CHECK(chain[0] == "sample,n_grid,kappa");
    for (std::size_t i = 1; i < chain.size(); ++i) {
        auto cells = split_csv(chain[i]);
        REQUIRE(cells.size() == 3);
        const int n_grid = std::stoi(cells[1]);
        CHECK((n_grid == 2 || n_grid == 4));
        const double kappa = std::stod(cells[2]);
        CHECK((kappa == doctest::Approx(1.0) || kappa == doctest::Approx(3.0)));
    }

    auto pred = read_lines(out_a / "predictive.csv");
    CHECK(pred[0] == "x,mean,q025,q975");
    CHECK(pred.size() == 10);  // header + 9 query points
    for (std::size_t i = 1; i < pred.size(); ++i) {
        auto cells = split_csv(pred[i]);
        REQUIRE(cells.size() == 4);
        CHECK(std::stod(cells[2]) <= std::stod(cells[3]));  // q025 <= q975
    }

    // The manifest lists each artifact with a CRC-32 matching the bytes on disk.
    json manifest = json::parse(frgp::read_file((out_a / "manifest.json").string()));
    REQUIRE(manifest.contains("artifacts"));
    bool saw_chain = false;
    for (const auto& entry : manifest["artifacts"]) {
        const std::string name = entry["file"].get<std::string>();
        const auto recorded = entry["crc32"].get<std::uint64_t>();
        const std::string bytes = frgp::read_file((out_a / name).string());
        CHECK(recorded == frgp::crc32(bytes));
        if (name == "chain.csv") saw_chain = true;
    }
    CHECK(saw_chain);
    CHECK(manifest["seed"].get<unsigned>() == 31);
    CHECK(manifest["command"].get<std::string>() == "fit");

    // Re-running the same configuration reproduces the data artifacts
    // byte for byte; only the manifest's wall-clock field may differ.
    fs::path out_b = dir / "b";
    REQUIRE(run_cli("fit --config \"" + cfg + "\" --out \"" + out_b.string() + "\"") == 0);
    CHECK(frgp::read_file((out_a / "chain.csv").string()) ==
          frgp::read_file((out_b / "chain.csv").string()));
    CHECK(frgp::read_file((out_a / "predictive.csv").string()) ==
          frgp::read_file((out_b / "predictive.csv").string()));

    // A different seed changes the chain.
    fs::path out_c = dir / "c";
    REQUIRE(run_cli("fit --config \"" + cfg + "\" --seed 77 --out \"" + out_c.string() + "\"") ==
            0);
    CHECK(frgp::read_file((out_a / "chain.csv").string()) !=
          frgp::read_file((out_c / "chain.csv").string()));
    json manifest_c = json::parse(frgp::read_file((out_c / "manifest.json").string()));
    CHECK(manifest_c["seed"].get<unsigned>() == 77);

    fs::remove_all(dir);
}

TEST_CASE("fit accepts an external data file") {
    fs::path dir = fresh_dir("fitdata");
    write_text(dir / "cfg.json", tiny_fit_config(5));

    std::ostringstream data;
    data << "x,y\n";
    for (int i = 0; i < 30; ++i) {
        const double x = (i + 0.5) / 30.0;
        data << frgp::format_double(x) << "," << frgp::format_double(0.25 + x * x) << "\n";
    }
    write_text(dir / "data.csv", data.str());

    fs::path out = dir / "out";
    REQUIRE(run_cli("fit --config \"" + (dir / "cfg.json").string() + "\" --data \"" +
                    (dir / "data.csv").string() + "\" --out \"" + out.string() + "\"") == 0);
    CHECK(fs::exists(out / "chain.csv"));
    CHECK(fs::exists(out / "predictive.csv"));

    // A malformed data file (wrong column count) is a configuration error.
    write_text(dir / "bad.csv", "x,y\n0.5,1.0,2.0\n");
    CHECK(run_cli("fit --config \"" + (dir / "cfg.json").string() + "\" --data \"" +
                  (dir / "bad.csv").string() + "\" --out \"" + (dir / "out2").string() + "\"") ==
          2);

    fs::remove_all(dir);
}

TEST_CASE("scan writes a normalized joint table with matching marginals") {
    fs::path dir = fresh_dir("scan");
    write_text(dir / "cfg.json", tiny_scan_config(11));
    fs::path out = dir / "out";
    REQUIRE(run_cli("scan --config \"" + (dir / "cfg.json").string() + "\" --out \"" +
                    out.string() + "\"") == 0);
    REQUIRE(fs::exists(out / "scan_table.csv"));
    REQUIRE(fs::exists(out / "n_marginal.csv"));
    REQUIRE(fs::exists(out / "kappa_marginal.csv"));
    REQUIRE(fs::exists(out / "n_marginal.svg"));
    REQUIRE(fs::exists(out / "kappa_marginal.svg"));

    auto table = read_lines(out / "scan_table.csv");
    REQUIRE(table.size() == 3);  // header + two grid sizes
    auto header = split_csv(table[0]);
    REQUIRE(header.size() == 3);  // n, kappa_..., kappa_...
    CHECK(header[0] == "n");
    CHECK(header[1].rfind("kappa_", 0) == 0);

    double total = 0.0;
    std::vector<double> row_sums;
    std::vector<double> col_sums(2, 0.0);
    for (std::size_t i = 1; i < table.size(); ++i) {
        auto cells = split_csv(table[i]);
        REQUIRE(cells.size() == 3);
        double row = 0.0;
        for (int j = 0; j < 2; ++j) {
            const double p = std::stod(cells[1 + static_cast<std::size_t>(j)]);
            CHECK(p >= 0.0);
            row += p;
            col_sums[static_cast<std::size_t>(j)] += p;
        }
        row_sums.push_back(row);
        total += row;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    auto n_marg = read_lines(out / "n_marginal.csv");
    REQUIRE(n_marg.size() == 3);
    CHECK(n_marg[0] == "n,probability");
    for (std::size_t i = 1; i < n_marg.size(); ++i) {
        auto cells = split_csv(n_marg[i]);
        REQUIRE(cells.size() == 2);
        CHECK(std::stod(cells[1]) == doctest::Approx(row_sums[i - 1]).epsilon(1e-9));
    }
    auto k_marg = read_lines(out / "kappa_marginal.csv");
    REQUIRE(k_marg.size() == 3);
    CHECK(k_marg[0] == "kappa,probability");
    for (std::size_t i = 1; i < k_marg.size(); ++i) {
        auto cells = split_csv(k_marg[i]);
        REQUIRE(cells.size() == 2);
        CHECK(std::stod(cells[1]) == doctest::Approx(col_sums[i - 1]).epsilon(1e-9));
    }

    CHECK(testutil::xml_well_formed(frgp::read_file((out / "n_marginal.svg").string())));
    CHECK(testutil::xml_well_formed(frgp::read_file((out / "kappa_marginal.svg").string())));

    fs::remove_all(dir);
}

TEST_CASE("bench writes replication and timing tables with quarantined wall times") {
    fs::path dir = fresh_dir("bench");
    write_text(dir / "cfg.json", tiny_bench_config(3));
    fs::path out_a = dir / "a";
    REQUIRE(run_cli("bench --config \"" + (dir / "cfg.json").string() + "\" --out \"" +
                    out_a.string() + "\"") == 0);
    REQUIRE(fs::exists(out_a / "amse.csv"));
    REQUIRE(fs::exists(out_a / "times.csv"));
    REQUIRE(fs::exists(out_a / "amse_boxplot.svg"));

    // Two runs x one kappa x one n x two replications.
    auto amse = read_lines(out_a / "amse.csv");
    REQUIRE(amse.size() == 5);
    CHECK(amse[0] == "method,kappa,n,replication,seed,amse,acceptance_rate,mode_n,mean_kappa,ok,error");
    for (std::size_t i = 1; i < amse.size(); ++i) {
        auto cells = split_csv(amse[i]);
        REQUIRE(cells.size() >= 10);  // error cell is empty on success
        CHECK((cells[0] == "spde" || cells[0] == "exact_gp"));
        CHECK(std::stod(cells[5]) >= 0.0);  // amse
        CHECK(cells[9] == "1");             // ok
    }

    auto times = read_lines(out_a / "times.csv");
    REQUIRE(times.size() == 5);
    CHECK(times[0] == "method,kappa,n,replication,wall_seconds");
    for (std::size_t i = 1; i < times.size(); ++i) {
        auto cells = split_csv(times[i]);
        REQUIRE(cells.size() == 5);
        CHECK(std::stod(cells[4]) >= 0.0);
    }

    CHECK(testutil::xml_well_formed(frgp::read_file((out_a / "amse_boxplot.svg").string())));

    // The replication table is deterministic; wall times live only in
    // times.csv and the manifest, so amse.csv is reproduced byte for byte.
    fs::path out_b = dir / "b";
    REQUIRE(run_cli("bench --config \"" + (dir / "cfg.json").string() + "\" --out \"" +
                    out_b.string() + "\"") == 0);
    CHECK(frgp::read_file((out_a / "amse.csv").string()) ==
          frgp::read_file((out_b / "amse.csv").string()));

    fs::remove_all(dir);
}

TEST_CASE("diag runs the named suite and reports check lines") {
    fs::path dir = fresh_dir("diag");
    fs::path out = dir / "out";
    REQUIRE(run_cli("diag --suite schur --out \"" + out.string() + "\"") == 0);
    REQUIRE(fs::exists(out / "diag_report.txt"));
    const std::string report = frgp::read_file((out / "diag_report.txt").string());
    CHECK(report.find("PASS") != std::string::npos);
    CHECK(report.find("FAIL") == std::string::npos);
    REQUIRE(fs::exists(out / "manifest.json"));

    fs::path out2 = dir / "out_smallball";
    REQUIRE(run_cli("diag --suite smallball --out \"" + out2.string() + "\"") == 0);
    const std::string report2 = frgp::read_file((out2 / "diag_report.txt").string());
    CHECK(report2.find("PASS") != std::string::npos);
    CHECK(report2.find("FAIL") == std::string::npos);
    REQUIRE(fs::exists(out2 / "smallball_trend.csv"));
    CHECK(testutil::xml_well_formed(frgp::read_file((out2 / "smallball_trend.svg").string())));

    CHECK(run_cli("diag --suite no-such-suite --out \"" + (dir / "x").string() + "\"") == 2);

    fs::remove_all(dir);
}
