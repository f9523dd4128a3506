// Command-line surface for the finite-rank GP library: fit posterior chains,
// scan (N, kappa) marginals, run replication/timing benchmarks, and execute
// the diagnostics suites. All randomness flows from one 64-bit seed expanded
// into per-component streams; every run writes a manifest with artifact
// checksums. Exit codes: 0 success, 2 usage/config error, 3 numerical failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "frgp/diagnostics.hpp"
#include "frgp/exact_gp.hpp"
#include "frgp/experiments.hpp"
#include "frgp/inference.hpp"
#include "frgp/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// fail-closed config parsing: unknown keys are errors

void expect_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
}

const json& require_key(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing required key \"" + key + "\"");
    return *it;
}

double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

long as_integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return j.get<long>();
}

std::string as_string(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    return j.get<std::string>();
}

frgp::Method parse_method(const std::string& name, const std::string& where) {
    if (name == "gpi") return frgp::Method::Gpi;
    if (name == "spde") return frgp::Method::Spde;
    if (name == "exact_gp") return frgp::Method::ExactGp;
    throw ConfigError(where + ": unknown method \"" + name + "\" (gpi | spde | exact_gp)");
}

frgp::FunctionId parse_function(const std::string& name, const std::string& where) {
    if (name == "f1") return frgp::FunctionId::F1;
    if (name == "f2") return frgp::FunctionId::F2;
    if (name == "f3") return frgp::FunctionId::F3;
    throw ConfigError(where + ": unknown function \"" + name + "\" (f1 | f2 | f3)");
}

frgp::KappaPrior parse_kappa_prior(const json& j, const std::string& where) {
    expect_keys(j, {"type", "shape", "scale", "values", "log_weights"}, where);
    const std::string type = as_string(require_key(j, "type", where), where + ".type");
    if (type == "gamma") {
        frgp::GammaPrior g;
        g.shape = as_number(require_key(j, "shape", where), where + ".shape");
        g.scale = as_number(require_key(j, "scale", where), where + ".scale");
        if (j.count("values") || j.count("log_weights"))
            throw ConfigError(where + ": gamma prior does not take values/log_weights");
        return g;
    }
    if (type == "discrete") {
        frgp::DiscretePrior d;
        const json& values = require_key(j, "values", where);
        if (!values.is_array() || values.empty()) throw ConfigError(where + ".values: expected a nonempty array");
        for (const auto& v : values) d.values.push_back(as_number(v, where + ".values[]"));
        if (j.count("log_weights")) {
            for (const auto& v : j.at("log_weights"))
                d.log_weights.push_back(as_number(v, where + ".log_weights[]"));
        } else {
            d.log_weights.assign(d.values.size(), 0.0);
        }
        if (j.count("shape") || j.count("scale"))
            throw ConfigError(where + ": discrete prior does not take shape/scale");
        return d;
    }
    throw ConfigError(where + ".type: expected \"gamma\" or \"discrete\"");
}

frgp::HyperPrior parse_hyper_prior(const json& j, const std::string& where) {
    expect_keys(j, {"n", "kappa"}, where);
    const json& jn = require_key(j, "n", where);
    expect_keys(jn, {"support", "rate", "uniform", "log_weights"}, where + ".n");
    frgp::HyperPrior prior;
    const json& support = require_key(jn, "support", where + ".n");
    if (!support.is_array() || support.empty())
        throw ConfigError(where + ".n.support: expected a nonempty array");
    for (const auto& v : support)
        prior.n_support.push_back(static_cast<int>(as_integer(v, where + ".n.support[]")));
    const int weight_specs = static_cast<int>(jn.count("rate")) + static_cast<int>(jn.count("uniform")) +
                             static_cast<int>(jn.count("log_weights"));
    if (weight_specs != 1)
        throw ConfigError(where + ".n: give exactly one of rate | uniform | log_weights");
    if (jn.count("rate")) {
        const double rate = as_number(jn.at("rate"), where + ".n.rate");
        for (int n : prior.n_support) prior.n_log_weights.push_back(-rate * n);
    } else if (jn.count("uniform")) {
        if (!jn.at("uniform").is_boolean() || !jn.at("uniform").get<bool>())
            throw ConfigError(where + ".n.uniform: expected true");
        prior.n_log_weights.assign(prior.n_support.size(), 0.0);
    } else {
        for (const auto& v : jn.at("log_weights"))
            prior.n_log_weights.push_back(as_number(v, where + ".n.log_weights[]"));
    }
    prior.kappa = parse_kappa_prior(require_key(j, "kappa", where), where + ".kappa");
    frgp::validate(prior);
    return prior;
}

struct BenchRun {
    frgp::Method method = frgp::Method::Gpi;
    std::vector<double> kappa_grid; // empty: sample kappa from the prior
};

struct CliConfig {
    std::uint64_t seed = 1;
    frgp::Method method = frgp::Method::Gpi;
    frgp::FunctionId function = frgp::FunctionId::F1;
    long n = 200;
    double sigma_sq = 0.01;
    double nu = 1.5;
    int beta = 2;
    std::optional<double> kappa_fixed;
    frgp::HyperPrior prior;
    bool has_prior = false;
    long iterations = 3500;
    long burn_in = 1000;
    int replications = 10;
    int amse_grid = 200;
    int query_points = 201; // fit: predictive grid resolution (d=1) or side (d=2)
    std::vector<int> scan_n;
    std::vector<double> scan_kappa;
    std::vector<BenchRun> bench_runs;
    std::vector<long> bench_n_values;
    bool has_timing = false;
    json timing_json;
};

CliConfig parse_config(const json& root) {
    expect_keys(root,
                {"schema_version", "seed", "method", "function", "n", "sigma_sq", "nu", "beta",
                 "kappa_fixed", "prior", "iterations", "burn_in", "replications", "amse_grid",
                 "query_points", "scan", "bench", "timing"},
                "config");
    const long version = as_integer(require_key(root, "schema_version", "config"), "config.schema_version");
    if (version != 1) throw ConfigError("config.schema_version: only version 1 is supported");
    CliConfig c;
    if (root.count("seed")) c.seed = static_cast<std::uint64_t>(as_integer(root.at("seed"), "config.seed"));
    if (root.count("method")) c.method = parse_method(as_string(root.at("method"), "config.method"), "config.method");
    if (root.count("function"))
        c.function = parse_function(as_string(root.at("function"), "config.function"), "config.function");
    if (root.count("n")) c.n = as_integer(root.at("n"), "config.n");
    if (root.count("sigma_sq")) c.sigma_sq = as_number(root.at("sigma_sq"), "config.sigma_sq");
    if (root.count("nu")) c.nu = as_number(root.at("nu"), "config.nu");
    if (root.count("beta")) c.beta = static_cast<int>(as_integer(root.at("beta"), "config.beta"));
    if (root.count("kappa_fixed")) c.kappa_fixed = as_number(root.at("kappa_fixed"), "config.kappa_fixed");
    if (root.count("prior")) {
        c.prior = parse_hyper_prior(root.at("prior"), "config.prior");
        c.has_prior = true;
    }
    if (root.count("iterations")) c.iterations = as_integer(root.at("iterations"), "config.iterations");
    if (root.count("burn_in")) c.burn_in = as_integer(root.at("burn_in"), "config.burn_in");
    if (root.count("replications"))
        c.replications = static_cast<int>(as_integer(root.at("replications"), "config.replications"));
    if (root.count("amse_grid")) c.amse_grid = static_cast<int>(as_integer(root.at("amse_grid"), "config.amse_grid"));
    if (root.count("query_points"))
        c.query_points = static_cast<int>(as_integer(root.at("query_points"), "config.query_points"));
    if (root.count("scan")) {
        const json& s = root.at("scan");
        expect_keys(s, {"n_values", "kappa_values"}, "config.scan");
        for (const auto& v : require_key(s, "n_values", "config.scan"))
            c.scan_n.push_back(static_cast<int>(as_integer(v, "config.scan.n_values[]")));
        for (const auto& v : require_key(s, "kappa_values", "config.scan"))
            c.scan_kappa.push_back(as_number(v, "config.scan.kappa_values[]"));
    }
    if (root.count("bench")) {
        const json& b = root.at("bench");
        expect_keys(b, {"runs", "n_values"}, "config.bench");
        for (const auto& r : require_key(b, "runs", "config.bench")) {
            expect_keys(r, {"method", "kappa_grid"}, "config.bench.runs[]");
            BenchRun run;
            run.method = parse_method(as_string(require_key(r, "method", "config.bench.runs[]"),
                                                "config.bench.runs[].method"),
                                      "config.bench.runs[].method");
            if (r.count("kappa_grid"))
                for (const auto& v : r.at("kappa_grid"))
                    run.kappa_grid.push_back(as_number(v, "config.bench.runs[].kappa_grid[]"));
            c.bench_runs.push_back(std::move(run));
        }
        for (const auto& v : require_key(b, "n_values", "config.bench"))
            c.bench_n_values.push_back(as_integer(v, "config.bench.n_values[]"));
    }
    if (root.count("timing")) {
        c.has_timing = true;
        c.timing_json = root.at("timing");
        expect_keys(c.timing_json,
                    {"methods", "n_values", "query_k", "reps", "batch_samples", "probe_samples"},
                    "config.timing");
    }
    return c;
}

frgp::TimingConfig parse_timing(const CliConfig& c) {
    const json& t = c.timing_json;
    frgp::TimingConfig tc;
    tc.methods.clear();
    for (const auto& m : require_key(t, "methods", "config.timing"))
        tc.methods.push_back(parse_method(as_string(m, "config.timing.methods[]"), "config.timing.methods[]"));
    tc.n_values.clear();
    for (const auto& v : require_key(t, "n_values", "config.timing"))
        tc.n_values.push_back(as_integer(v, "config.timing.n_values[]"));
    if (t.count("query_k")) tc.query_k = static_cast<int>(as_integer(t.at("query_k"), "config.timing.query_k"));
    if (t.count("reps")) tc.reps = static_cast<int>(as_integer(t.at("reps"), "config.timing.reps"));
    if (t.count("batch_samples")) tc.batch_samples = as_integer(t.at("batch_samples"), "config.timing.batch_samples");
    if (t.count("probe_samples")) tc.probe_samples = as_integer(t.at("probe_samples"), "config.timing.probe_samples");
    tc.function_id = c.function;
    tc.d = frgp::function_dim(c.function);
    tc.sigma_sq = c.sigma_sq;
    if (!c.has_prior) throw ConfigError("config.timing: requires config.prior");
    tc.prior = c.prior;
    tc.nu = c.nu;
    tc.beta = c.beta;
    tc.seed = c.seed;
    return tc;
}

// ---------------------------------------------------------------------------
// presets

json preset_json(const std::string& name) {
    const json f1_prior = {
        {"n", {{"support", {4, 8, 12, 20, 30}}, {"rate", 4.0}}},
        {"kappa", {{"type", "gamma"}, {"shape", 3.0}, {"scale", 1.0 / 3.0}}},
    };
    const json f1_prior_relaxed = {
        {"n", {{"support", {4, 8, 12, 20, 30}}, {"rate", 0.25}}},
        {"kappa", {{"type", "gamma"}, {"shape", 3.0}, {"scale", 1.0 / 3.0}}},
    };
    const json f3_prior = {
        {"n", {{"support", {6, 8, 10, 14, 18}}, {"uniform", true}}},
        {"kappa", {{"type", "gamma"}, {"shape", 5.0}, {"scale", 0.2}}},
    };
    auto gpi_f1 = [&](long n) {
        return json{{"schema_version", 1}, {"seed", 20260814}, {"method", "gpi"},
                    {"function", "f1"},   {"n", n},            {"sigma_sq", 0.01},
                    {"nu", 1.5},          {"prior", f1_prior}, {"iterations", 3500},
                    {"burn_in", 1000},    {"replications", 10}, {"amse_grid", 200},
                    {"query_points", 201},
                    {"scan", {{"n_values", {4, 8, 12, 20, 30}}, {"kappa_values", {5, 15, 25, 35, 45, 55}}}}};
    };
    if (name == "gpi-f1-n200") return gpi_f1(200);
    if (name == "gpi-f1-n500") return gpi_f1(500);
    if (name == "gpi-f1-n1000") return gpi_f1(1000);
    if (name == "gpi-f1-n200-relaxed") {
        json j = gpi_f1(200);
        j["prior"] = f1_prior_relaxed;
        return j;
    }
    if (name == "spde-vs-gp-f2") {
        return json{{"schema_version", 1},
                    {"seed", 20260814},
                    {"method", "spde"},
                    {"function", "f2"},
                    {"n", 1000},
                    {"sigma_sq", 0.01},
                    {"nu", 7.0},
                    {"beta", 2},
                    {"prior", f1_prior},
                    {"iterations", 3500},
                    {"burn_in", 1000},
                    {"replications", 10},
                    {"amse_grid", 200},
                    {"bench",
                     {{"runs",
                       {{{"method", "spde"}, {"kappa_grid", {5, 10, 15, 20, 25, 30}}},
                        {{"method", "exact_gp"}, {"kappa_grid", {5, 10, 15, 20, 25, 30}}}}},
                      {"n_values", {1000}}}}};
    }
    if (name == "gpi-vs-gp-f3") {
        return json{{"schema_version", 1},
                    {"seed", 20260814},
                    {"method", "gpi"},
                    {"function", "f3"},
                    {"n", 500},
                    {"sigma_sq", 0.01},
                    {"nu", 1.5},
                    {"prior", f3_prior},
                    {"iterations", 3500},
                    {"burn_in", 1000},
                    {"replications", 10},
                    {"amse_grid", 40},
                    {"query_points", 41},
                    {"bench",
                     {{"runs",
                       {{{"method", "gpi"}},
                        {{"method", "exact_gp"}, {"kappa_grid", {0.2, 1.0, 5.0}}}}},
                      {"n_values", {200, 500}}}}};
    }
    if (name == "timing-f3") {
        return json{{"schema_version", 1},
                    {"seed", 20260814},
                    {"method", "gpi"},
                    {"function", "f3"},
                    {"sigma_sq", 0.01},
                    {"nu", 1.5},
                    {"prior", f3_prior},
                    {"timing",
                     {{"methods", {"gpi", "exact_gp"}},
                      {"n_values", {200, 500, 1000}},
                      {"query_k", 40},
                      {"reps", 3},
                      {"batch_samples", 10},
                      {"probe_samples", 20}}}};
    }
    throw ConfigError("unknown preset \"" + name +
                      "\"; available: gpi-f1-n200, gpi-f1-n500, gpi-f1-n1000, gpi-f1-n200-relaxed, "
                      "spde-vs-gp-f2, gpi-vs-gp-f3, timing-f3");
}

void apply_full_scale(CliConfig& c) {
    c.replications = 50;
    if (frgp::function_dim(c.function) == 1) c.amse_grid = 1000;
    if (c.has_timing) {
        c.timing_json["reps"] = 10;
        c.timing_json["n_values"] = {200, 500, 1000, 2000};
    }
}

// ---------------------------------------------------------------------------
// artifact plumbing

struct ArtifactSink {
    std::string dir;
    std::vector<std::pair<std::string, std::string>> files;

    void add(const std::string& name, const std::string& content) { files.emplace_back(name, content); }

    void flush(const std::string& command, const std::string& config_path, std::uint64_t seed,
               double wall_seconds) {
        fs::create_directories(dir);
        json artifacts = json::array();
        for (const auto& [name, content] : files) {
            frgp::write_file((fs::path(dir) / name).string(), content);
            artifacts.push_back({{"file", name}, {"crc32", frgp::crc32(content)}});
        }
        json manifest = {{"command", command},       {"config", config_path}, {"seed", seed},
                         {"output_dir", dir},        {"artifacts", artifacts},
                         {"wall_seconds", wall_seconds}};
        frgp::write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    }
};

std::string fmt(double v) { return frgp::format_double(v); }

// ---------------------------------------------------------------------------
// commands

frgp::ExperimentConfig experiment_config(const CliConfig& c) {
    frgp::ExperimentConfig ec;
    ec.function_id = c.function;
    ec.n = c.n;
    ec.d = frgp::function_dim(c.function);
    ec.sigma_sq = c.sigma_sq;
    ec.method = c.method;
    ec.prior = c.prior;
    ec.nu = c.nu;
    ec.beta = c.beta;
    ec.kappa_fixed = c.kappa_fixed;
    ec.iterations = c.iterations;
    ec.burn_in = c.burn_in;
    ec.replications = c.replications;
    ec.amse_grid = c.amse_grid;
    ec.seed = c.seed;
    return ec;
}

frgp::Dataset load_dataset(const std::string& path, int d, double sigma_sq) {
    const std::string text = frgp::read_file(path);
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) { // header
            first = false;
            continue;
        }
        std::vector<double> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(std::stod(cell));
        if (static_cast<int>(cells.size()) != d + 1)
            throw ConfigError("data file: expected " + std::to_string(d + 1) + " columns per row");
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw ConfigError("data file: no data rows");
    frgp::Dataset data;
    data.dim = d;
    data.sigma_sq = sigma_sq;
    data.x.resize(static_cast<long>(rows.size()), d);
    data.y.resize(static_cast<long>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) data.x(static_cast<long>(i), j) = rows[i][static_cast<std::size_t>(j)];
        data.y[static_cast<long>(i)] = rows[i][static_cast<std::size_t>(d)];
    }
    frgp::validate(data);
    return data;
}

int cmd_fit(const CliConfig& c, const std::string& config_path, const std::string& out_dir,
            const std::string& data_path) {
    const auto t0 = std::chrono::steady_clock::now();
    if (c.method == frgp::Method::ExactGp)
        throw ConfigError("fit: exact_gp is a benchmark baseline; use bench instead");
    if (!c.has_prior) throw ConfigError("fit: config.prior is required");
    const int d = frgp::function_dim(c.function);

    frgp::Dataset data;
    if (data_path.empty()) {
        frgp::ExperimentConfig ec = experiment_config(c);
        frgp::Rng data_rng = frgp::Rng::stream(c.seed, 0);
        data = frgp::generate_data(ec, data_rng);
    } else {
        data = load_dataset(data_path, d, c.sigma_sq);
    }

    frgp::HyperPrior prior = c.prior;
    if (c.kappa_fixed) prior.kappa = frgp::DiscretePrior{{*c.kappa_fixed}, {0.0}};
    const frgp::ModelBackend backend =
        c.method == frgp::Method::Gpi
            ? frgp::ModelBackend{frgp::GpiBackend{frgp::KernelFamily::Matern, c.nu, d}}
            : frgp::ModelBackend{frgp::SpdeBackend{c.beta}};
    frgp::Rng sampler_rng = frgp::Rng::stream(c.seed, 1);
    const frgp::ChainRecord chain =
        frgp::run_sampler(data, prior, backend, c.iterations, c.burn_in, sampler_rng, c.seed);

    frgp::CsvWriter chain_csv({"sample", "n_grid", "kappa"});
    for (std::size_t i = 0; i < chain.samples.size(); ++i)
        chain_csv.add_row({std::to_string(i), std::to_string(chain.samples[i].n_grid),
                           fmt(chain.samples[i].kappa)});

    const int side = std::max(2, c.query_points);
    const Eigen::MatrixXd query = frgp::regular_grid(side - 1, d);
    const frgp::PredictiveSummary pred =
        frgp::posterior_predictive(chain, query, d, {0.025, 0.975});
    std::vector<std::string> cols = d == 1 ? std::vector<std::string>{"x", "mean", "q025", "q975"}
                                           : std::vector<std::string>{"x1", "x2", "mean", "q025", "q975"};
    frgp::CsvWriter pred_csv(cols);
    for (long i = 0; i < query.rows(); ++i) {
        std::vector<std::string> row;
        for (int j = 0; j < d; ++j) row.push_back(fmt(query(i, j)));
        row.push_back(fmt(pred.mean[i]));
        row.push_back(fmt(pred.quantiles(i, 0)));
        row.push_back(fmt(pred.quantiles(i, 1)));
        pred_csv.add_row(row);
    }

    ArtifactSink sink{out_dir, {}};
    sink.add("chain.csv", chain_csv.str());
    sink.add("predictive.csv", pred_csv.str());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sink.flush("fit", config_path, c.seed, wall);
    return 0;
}

int cmd_scan(const CliConfig& c, const std::string& config_path, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    if (c.method == frgp::Method::ExactGp) throw ConfigError("scan: method must be gpi or spde");
    if (!c.has_prior) throw ConfigError("scan: config.prior is required");
    if (c.scan_n.empty() || c.scan_kappa.empty()) throw ConfigError("scan: config.scan is required");
    const int d = frgp::function_dim(c.function);
    frgp::ExperimentConfig ec = experiment_config(c);
    frgp::Rng data_rng = frgp::Rng::stream(c.seed, 0);
    const frgp::Dataset data = frgp::generate_data(ec, data_rng);
    const frgp::ModelBackend backend =
        c.method == frgp::Method::Gpi
            ? frgp::ModelBackend{frgp::GpiBackend{frgp::KernelFamily::Matern, c.nu, d}}
            : frgp::ModelBackend{frgp::SpdeBackend{c.beta}};
    const frgp::ScanTable table = frgp::marginal_scan(data, c.prior, backend, c.scan_n, c.scan_kappa);

    std::vector<std::string> cols{"n"};
    for (double k : c.scan_kappa) cols.push_back("kappa_" + frgp::format_sci(k, 10));
    frgp::CsvWriter table_csv(cols);
    for (std::size_t i = 0; i < c.scan_n.size(); ++i) {
        std::vector<std::string> row{std::to_string(c.scan_n[i])};
        for (std::size_t j = 0; j < c.scan_kappa.size(); ++j)
            row.push_back(fmt(table.posterior(static_cast<long>(i), static_cast<long>(j))));
        table_csv.add_row(row);
    }
    frgp::CsvWriter n_csv({"n", "probability"});
    for (std::size_t i = 0; i < c.scan_n.size(); ++i)
        n_csv.add_row({std::to_string(c.scan_n[i]), fmt(table.n_marginal[static_cast<long>(i)])});
    frgp::CsvWriter k_csv({"kappa", "probability"});
    for (std::size_t j = 0; j < c.scan_kappa.size(); ++j)
        k_csv.add_row({fmt(c.scan_kappa[j]), fmt(table.kappa_marginal[static_cast<long>(j)])});

    frgp::svg::Series n_series{"p(N | data)", {}, {}};
    for (std::size_t i = 0; i < c.scan_n.size(); ++i) {
        n_series.x.push_back(c.scan_n[i]);
        n_series.y.push_back(table.n_marginal[static_cast<long>(i)]);
    }
    frgp::svg::Series k_series{"p(kappa | data)", {}, {}};
    for (std::size_t j = 0; j < c.scan_kappa.size(); ++j) {
        k_series.x.push_back(c.scan_kappa[j]);
        k_series.y.push_back(table.kappa_marginal[static_cast<long>(j)]);
    }

    ArtifactSink sink{out_dir, {}};
    sink.add("scan_table.csv", table_csv.str());
    sink.add("n_marginal.csv", n_csv.str());
    sink.add("kappa_marginal.csv", k_csv.str());
    sink.add("n_marginal.svg", frgp::svg::line_plot("posterior marginal over N", "N", "probability",
                                                    {n_series}));
    sink.add("kappa_marginal.svg", frgp::svg::line_plot("posterior marginal over kappa", "kappa",
                                                        "probability", {k_series}));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sink.flush("scan", config_path, c.seed, wall);
    return 0;
}

int cmd_bench(const CliConfig& c, const std::string& config_path, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    if (c.bench_runs.empty() && !c.has_timing)
        throw ConfigError("bench: config needs a bench and/or timing section");

    ArtifactSink sink{out_dir, {}};

    if (!c.bench_runs.empty()) {
        if (!c.has_prior) throw ConfigError("bench: config.prior is required");
        frgp::CsvWriter amse_csv(
            {"method", "kappa", "n", "replication", "seed", "amse", "acceptance_rate", "mode_n",
             "mean_kappa", "ok", "error"});
        frgp::CsvWriter times_csv({"method", "kappa", "n", "replication", "wall_seconds"});
        std::map<std::string, std::vector<double>> box_groups; // label -> log10 amse
        std::vector<std::string> box_order;
        for (const BenchRun& run : c.bench_runs) {
            std::vector<std::optional<double>> kappas;
            if (run.kappa_grid.empty())
                kappas.push_back(std::nullopt);
            else
                for (double k : run.kappa_grid) kappas.push_back(k);
            for (const auto& kappa : kappas) {
                for (long n : c.bench_n_values) {
                    frgp::ExperimentConfig ec = experiment_config(c);
                    ec.method = run.method;
                    ec.n = n;
                    ec.kappa_fixed = kappa;
                    const frgp::ReplicationTable table = frgp::run_replications(ec);
                    const std::string kappa_txt = kappa ? fmt(*kappa) : "prior";
                    const std::string label =
                        std::string(frgp::method_name(run.method)) +
                        (kappa ? " k=" + frgp::format_sci(*kappa, 3) : "") + " n=" + std::to_string(n);
                    box_order.push_back(label);
                    for (const frgp::ReplicationRow& row : table.rows) {
                        amse_csv.add_row({frgp::method_name(run.method), kappa_txt, std::to_string(n),
                                          std::to_string(row.replication), std::to_string(row.seed),
                                          fmt(row.amse), fmt(row.acceptance_rate),
                                          std::to_string(row.mode_n), fmt(row.mean_kappa),
                                          row.ok ? "1" : "0", row.error});
                        times_csv.add_row({frgp::method_name(run.method), kappa_txt, std::to_string(n),
                                           std::to_string(row.replication), fmt(row.wall_seconds)});
                        if (row.ok && row.amse > 0.0)
                            box_groups[label].push_back(std::log10(row.amse));
                    }
                }
            }
        }
        std::vector<frgp::svg::Box> boxes;
        for (const std::string& label : box_order) {
            auto it = box_groups.find(label);
            if (it == box_groups.end() || it->second.empty()) continue;
            std::vector<double>& v = it->second;
            frgp::svg::Box b;
            b.label = label;
            b.lo = frgp::quantile(v, 0.0);
            b.q1 = frgp::quantile(v, 0.25);
            b.med = frgp::quantile(v, 0.5);
            b.q3 = frgp::quantile(v, 0.75);
            b.hi = frgp::quantile(v, 1.0);
            boxes.push_back(std::move(b));
            box_groups.erase(it); // keep first occurrence order, no duplicates
        }
        sink.add("amse.csv", amse_csv.str());
        sink.add("times.csv", times_csv.str());
        if (!boxes.empty())
            sink.add("amse_boxplot.svg", frgp::svg::box_plot("log10 AMSE by configuration",
                                                             "log10 AMSE", boxes));
    }

    if (c.has_timing) {
        const frgp::TimingConfig tc = parse_timing(c);
        const frgp::TimingTable table = frgp::timing_benchmark(tc);
        frgp::CsvWriter timing_csv(
            {"method", "n", "replication", "seconds_batch", "seconds_per_iteration", "ok", "error"});
        std::map<std::string, std::map<long, std::vector<double>>> by_method;
        for (const frgp::TimingRow& row : table.rows) {
            timing_csv.add_row({row.method, std::to_string(row.n), std::to_string(row.rep),
                                fmt(row.seconds_batch), fmt(row.seconds_per_iteration),
                                row.ok ? "1" : "0", row.error});
            if (row.ok) by_method[row.method][row.n].push_back(row.seconds_batch);
        }
        std::vector<frgp::svg::Series> series;
        for (auto& [method, by_n] : by_method) {
            frgp::svg::Series s{method + " (log10 s)", {}, {}};
            for (auto& [n, vals] : by_n) {
                s.x.push_back(std::log10(static_cast<double>(n)));
                s.y.push_back(std::log10(frgp::median(vals)));
            }
            series.push_back(std::move(s));
        }
        sink.add("timing.csv", timing_csv.str());
        if (!series.empty())
            sink.add("timing_plot.svg",
                     frgp::svg::line_plot("posterior-sample batch wall time", "log10 n",
                                          "log10 seconds", series));
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sink.flush("bench", config_path, c.seed, wall);
    return 0;
}

// ---------------------------------------------------------------------------
// diagnostics suites

struct DiagReport {
    std::ostringstream text;
    int failures = 0;

    void check(const std::string& name, double margin, double tol, bool pass_iff_below = true) {
        const bool pass = pass_iff_below ? margin < tol : margin >= tol;
        text << (pass ? "PASS" : "FAIL") << "  " << name << "  margin=" << frgp::format_sci(margin, 6)
             << " tol=" << frgp::format_sci(tol, 6) << "\n";
        if (!pass) ++failures;
    }

    void check_flag(const std::string& name, bool pass, const std::string& detail) {
        text << (pass ? "PASS" : "FAIL") << "  " << name << "  " << detail << "\n";
        if (!pass) ++failures;
    }
};

void diag_schur(DiagReport& report) {
    for (int n : {4, 8, 16})
        for (double kappa : {0.5, 1.0, 2.0})
            for (int beta : {2, 4}) {
                const frgp::SchurReport r = frgp::schur_identity_check(n, kappa, beta);
                std::ostringstream name;
                name << "schur N=" << n << " kappa=" << kappa << " beta=" << beta;
                report.check(name.str() + " covariance", r.dev_covariance, 1e-8);
                report.check(name.str() + " mean", r.dev_mean, 1e-8);
            }
}

void diag_eigen(DiagReport& report) {
    for (int n : {8, 16, 32})
        for (double kappa : {0.5, 1.0, 2.0}) {
            const frgp::EigenFormulaReport r = frgp::eigen_formula_check(n, kappa);
            std::ostringstream name;
            name << "eigen N=" << n << " kappa=" << kappa;
            const bool exactly_one = (r.dev_cos_k_over_n < 1e-8) != (r.dev_cos_k_pi_over_n < 1e-8);
            report.check_flag(name.str(), exactly_one,
                              "matches: " + r.matching_form +
                                  " dev(cos k/N)=" + frgp::format_sci(r.dev_cos_k_over_n, 4) +
                                  " dev(cos k pi/N)=" + frgp::format_sci(r.dev_cos_k_pi_over_n, 4));
        }
}

void diag_un(DiagReport& report) {
    auto shifted_square = [](double x) { return (x + 3.0) * (x + 3.0); };
    for (int m : {8, 16, 32, 64}) {
        const frgp::UnReport r = frgp::un_condition_check(shifted_square, m, 8.0);
        std::ostringstream name;
        name << "un (x+3)^2 M=" << m << " K=8";
        report.check_flag(name.str(), r.holds, "ratio=" + frgp::format_sci(r.ratio, 6));
        // constant curvature: every m_k equals 1/(8 M^2)
        double dev = 0.0;
        for (double mk : r.m_values) dev = std::max(dev, std::fabs(mk - 1.0 / (8.0 * m * m)));
        report.check(name.str() + " quadratic m_k", dev, 1e-8);
    }
    auto f2 = [](double x) { return frgp::true_function(frgp::FunctionId::F2, x); };
    const frgp::UnReport r = frgp::un_condition_check(f2, 64, 680.0);
    report.check_flag("un f2 M=64 K=680", r.holds, "ratio=" + frgp::format_sci(r.ratio, 6));
    auto linear = [](double x) { return 2.0 * x - 0.7; };
    const frgp::UnReport rl = frgp::un_condition_check(linear, 16, 8.0);
    report.check_flag("un linear degenerate", rl.holds && rl.ratio == 0.0,
                      "ratio=" + frgp::format_sci(rl.ratio, 6));
}

void diag_smallball(DiagReport& report, ArtifactSink& sink, std::uint64_t seed) {
    // N=1, beta=2: the coefficient pair is exactly bivariate normal, so the
    // Monte Carlo estimate must agree with 2-d quadrature
    const frgp::PrecisionOperator prior = frgp::precision(1, 1.0, 2);
    const Eigen::Matrix2d cov = Eigen::Matrix2d(prior.band.to_dense()).inverse();
    for (double eps : {0.5, 1.0, 2.0}) {
        frgp::Rng rng = frgp::Rng::stream(seed, 100 + static_cast<std::uint64_t>(eps * 10));
        const frgp::SmallBallResult mc =
            frgp::small_ball_mc(prior, eps, frgp::BallNorm::SupAtGrid, 20000, rng);
        const double exact = frgp::bivariate_normal_rect_prob(cov, -eps, eps, -eps, eps);
        std::ostringstream name;
        name << "smallball N=1 eps=" << eps;
        report.check_flag(name.str(), exact >= mc.lower && exact <= mc.upper,
                          "mc=" + frgp::format_sci(mc.estimate, 5) + " ci=[" +
                              frgp::format_sci(mc.lower, 5) + "," + frgp::format_sci(mc.upper, 5) +
                              "] quadrature=" + frgp::format_sci(exact, 5));
    }
    // trend of -log P(sup < eps) over N: the full curve is recorded for the
    // plot; growth is the asserted property (the endpoint variances grow
    // linearly with N, so the raw curve keeps a slow logarithmic climb
    // instead of leveling off exactly)
    const double eps = 0.3;
    frgp::CsvWriter trend_csv({"n_grid", "estimate", "ci_lower", "ci_upper", "neg_log_estimate"});
    frgp::svg::Series series{"-log P", {}, {}};
    for (int n : {1, 2, 4, 8, 16, 32, 64}) {
        const frgp::PrecisionOperator p = frgp::precision(n, 1.0, 2);
        frgp::Rng rng = frgp::Rng::stream(seed, 200 + static_cast<std::uint64_t>(n));
        const frgp::SmallBallResult mc = frgp::small_ball_mc(p, eps, frgp::BallNorm::SupAtGrid, 20000, rng);
        const double neg_log = mc.successes > 0 ? -std::log(mc.estimate) : std::nan("");
        trend_csv.add_row({std::to_string(n), fmt(mc.estimate), fmt(mc.lower), fmt(mc.upper),
                           fmt(neg_log)});
        if (mc.successes > 0) {
            series.x.push_back(n);
            series.y.push_back(neg_log);
        }
    }
    sink.add("smallball_trend.csv", trend_csv.str());
    sink.add("smallball_trend.svg",
             frgp::svg::line_plot("small-ball decay, eps=0.3, beta=2, kappa=1", "N",
                                  "-log P(sup < eps)", {series}));
    bool grows = series.y.size() >= 3 && series.y[1] > series.y[0];
    report.check_flag("smallball trend recorded", grows && !series.y.empty(),
                      "points=" + std::to_string(series.y.size()));
}

int cmd_diag(const std::string& suite, const std::string& out_dir, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::set<std::string> known{"schur", "eigen", "un", "smallball", "all"};
    if (!known.count(suite))
        throw ConfigError("unknown diagnostics suite \"" + suite +
                          "\"; available: schur, eigen, un, smallball, all");
    DiagReport report;
    ArtifactSink sink{out_dir, {}};
    if (suite == "schur" || suite == "all") diag_schur(report);
    if (suite == "eigen" || suite == "all") diag_eigen(report);
    if (suite == "un" || suite == "all") diag_un(report);
    if (suite == "smallball" || suite == "all") diag_smallball(report, sink, seed);
    report.text << (report.failures == 0 ? "ALL CHECKS PASSED\n"
                                         : "FAILURES: " + std::to_string(report.failures) + "\n");
    sink.add("diag_report.txt", report.text.str());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sink.flush("diag", "", seed, wall);
    std::fputs(report.text.str().c_str(), stdout);
    return report.failures == 0 ? 0 : 3;
}

// ---------------------------------------------------------------------------

CliConfig load_cli_config(const std::string& config_path, const std::string& preset,
                          std::optional<std::uint64_t> seed_override, bool full_scale) {
    json root;
    if (!preset.empty() && !config_path.empty())
        throw ConfigError("give either --config or --preset, not both");
    if (!preset.empty()) {
        root = preset_json(preset);
    } else if (!config_path.empty()) {
        try {
            root = json::parse(frgp::read_file(config_path));
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
    } else {
        throw ConfigError("one of --config or --preset is required");
    }
    CliConfig c = parse_config(root);
    if (seed_override) c.seed = *seed_override;
    if (full_scale) apply_full_scale(c);
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-rank Gaussian-process priors with dependent coefficients"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir = "out", data_path, suite = "all";
    std::optional<std::uint64_t> seed_override;
    bool full_scale = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--preset", preset, "named built-in config");
        sub->add_option("--seed", seed_override, "override the config seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--full-scale", full_scale, "full replication counts and grids");
    };

    CLI::App* fit = app.add_subcommand("fit", "sample the hierarchical posterior, write chain + predictive");
    add_common(fit);
    fit->add_option("--data", data_path, "CSV with x[,x2],y columns; omit to simulate");

    CLI::App* scan = app.add_subcommand("scan", "evaluate p(N, kappa | data) on a grid");
    add_common(scan);

    CLI::App* bench = app.add_subcommand("bench", "replication studies and timing benchmarks");
    add_common(bench);

    CLI::App* diag = app.add_subcommand("diag", "run a diagnostics suite");
    diag->add_option("--suite", suite, "schur | eigen | un | smallball | all");
    diag->add_option("--seed", seed_override, "Monte Carlo seed");
    diag->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (diag->parsed()) return cmd_diag(suite, out_dir, seed_override.value_or(20260814));
        const CliConfig c = load_cli_config(config_path, preset, seed_override, full_scale);
        if (fit->parsed()) return cmd_fit(c, config_path.empty() ? preset : config_path, out_dir, data_path);
        if (scan->parsed()) return cmd_scan(c, config_path.empty() ? preset : config_path, out_dir);
        if (bench->parsed()) return cmd_bench(c, config_path.empty() ? preset : config_path, out_dir);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
}
