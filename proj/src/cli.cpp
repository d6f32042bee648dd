#include "qtube/cli.hpp"

#include "qtube/analysis.hpp"
#include "qtube/experiments.hpp"
#include "qtube/io.hpp"
#include "qtube/rng.hpp"
#include "qtube/solver.hpp"
#include "qtube/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace qtube {

namespace {

using nlohmann::json;

double parse_inf(const std::string& s, const char* what) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw CLI::ValidationError(std::string(what) + ": expected number or \"inf\"");
    }
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("QTUBE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CLI::ValidationError("cannot read " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

ExperimentConfig load_config(const std::string& path) {
    return config_from_json(json::parse(read_file(path)));
}

void write_with_manifest(const std::filesystem::path& out_dir, const json& config,
                         std::uint64_t seed,
                         const std::vector<std::pair<std::string, std::string>>& files) {
    std::vector<std::string> names;
    for (const auto& [name, content] : files) {
        atomic_write(out_dir / name, content);
        names.push_back((out_dir / name).string());
    }
    atomic_write(out_dir / "manifest.json",
                 make_manifest(config, seed, names).dump(2) + "\n");
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"kernel regression with the eps-insensitive q-norm loss"};
    app.require_subcommand(1);
    int threads_flag = 0;
    app.add_option("--threads", threads_flag, "worker threads (env QTUBE_THREADS)");

    // fit: one dataset -> coefficients
    auto* fit_cmd = app.add_subcommand("fit", "fit a dataset from CSV");
    std::string fit_data, fit_out, fit_kernel = "gaussian";
    double fit_q = 2.0, fit_eps = 0.0, fit_lambda = 0.1, fit_bandwidth = 0.35;
    double fit_offset = 1.0;
    int fit_degree = 2;
    fit_cmd->add_option("--data", fit_data, "input CSV (x_0,...,y)")->required();
    fit_cmd->add_option("--q", fit_q, "loss exponent q >= 1");
    fit_cmd->add_option("--eps", fit_eps, "tube half-width");
    fit_cmd->add_option("--lambda", fit_lambda, "regularization weight");
    fit_cmd->add_option("--kernel", fit_kernel, "gaussian | polynomial | linear");
    fit_cmd->add_option("--bandwidth", fit_bandwidth, "gaussian bandwidth");
    fit_cmd->add_option("--degree", fit_degree, "polynomial degree");
    fit_cmd->add_option("--offset", fit_offset, "polynomial offset");
    fit_cmd->add_option("--out", fit_out, "output JSON path (stdout when absent)");

    // rates: learning-rate sweep from a config file
    auto* rates_cmd = app.add_subcommand("rates", "learning-rate experiment");
    std::string rates_config, rates_out = "out";
    std::optional<double> rates_q, rates_alpha;
    std::optional<std::string> rates_eta;
    std::optional<std::vector<int>> rates_T;
    std::optional<std::uint64_t> rates_seed;
    rates_cmd->add_option("--config", rates_config, "JSON config")->required();
    rates_cmd->add_option("--q", rates_q, "override q");
    rates_cmd->add_option("--alpha", rates_alpha, "override alpha");
    rates_cmd->add_option("--eta", rates_eta, "override eta (number or \"inf\")");
    rates_cmd->add_option("--T-grid", rates_T, "override sample sizes")
        ->delimiter(',');
    rates_cmd->add_option("--seed", rates_seed, "override seed");
    rates_cmd->add_option("--out", rates_out, "output directory");

    // sparsity: eps sweep on one dataset
    auto* sp_cmd = app.add_subcommand("sparsity", "support-ratio sweep over eps");
    std::string sp_config, sp_out = "out";
    int sp_T = 128;
    double sp_lambda = 0.01;
    std::vector<double> sp_grid = {0.0, 0.05, 0.1, 0.2, 0.4, 0.8};
    sp_cmd->add_option("--config", sp_config, "JSON config")->required();
    sp_cmd->add_option("--T", sp_T, "dataset size");
    sp_cmd->add_option("--lambda", sp_lambda, "regularization weight");
    sp_cmd->add_option("--eps-grid", sp_grid, "eps values")->delimiter(',');
    sp_cmd->add_option("--out", sp_out, "output directory");

    // verify: invariant suites
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant suites");
    int verify_mc = 20000;
    std::uint64_t verify_seed = 20240817;
    verify_cmd->add_option("--n-mc", verify_mc, "Monte-Carlo samples");
    verify_cmd->add_option("--seed", verify_seed, "base seed");

    // calc-rate: exponent calculator
    auto* calc_cmd = app.add_subcommand("calc-rate", "learning-rate exponent");
    RateParams rp;
    std::string calc_p = "inf", calc_eta = "inf";
    calc_cmd->add_option("--q", rp.q, "loss exponent");
    calc_cmd->add_option("--w", rp.w, "noise exponent");
    calc_cmd->add_option("--p", calc_p, "moment index (number or \"inf\")");
    calc_cmd->add_option("--alpha", rp.alpha, "lambda = T^{-alpha}");
    calc_cmd->add_option("--eta", calc_eta, "eps = T^{-eta} (\"inf\" for eps = 0)");
    calc_cmd->add_option("--beta", rp.beta, "regularization-decay exponent");
    calc_cmd->add_option("--k", rp.k, "capacity exponent");
    calc_cmd->add_option("--xi", rp.xi, "capacity slack");

    std::vector<const char*> argv;
    argv.push_back("qtube");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    set_threads(resolve_threads(threads_flag));

    try {
        if (*fit_cmd) {
            KernelSpec kernel = KernelSpec::gaussian(fit_bandwidth);
            if (fit_kernel == "polynomial")
                kernel = KernelSpec::polynomial(fit_degree, fit_offset);
            else if (fit_kernel == "linear")
                kernel = KernelSpec::linear();
            else if (fit_kernel != "gaussian")
                throw std::invalid_argument("unknown kernel: " + fit_kernel);
            const Dataset ds = dataset_from_csv(read_file(fit_data));
            const FitResult fr =
                fit(ds, kernel, LossSpec{fit_q, fit_eps}, fit_lambda);
            const std::string payload = fit_result_to_json(fr).dump(2) + "\n";
            if (fit_out.empty())
                std::cout << payload;
            else
                atomic_write(fit_out, payload);
            return 0;
        }

        if (*rates_cmd) {
            ExperimentConfig cfg = load_config(rates_config);
            if (rates_q) cfg.q = *rates_q;
            if (rates_alpha) cfg.alpha = *rates_alpha;
            if (rates_eta) cfg.eta = parse_inf(*rates_eta, "--eta");
            if (rates_T) cfg.T_grid = *rates_T;
            if (rates_seed) cfg.seed = *rates_seed;
            const RateReport report = run_rate_experiment(cfg);
            write_with_manifest(
                rates_out, config_to_json(cfg), cfg.seed,
                {{"rates.json", rate_report_to_json(report).dump(2) + "\n"},
                 {"rates.csv", rate_report_to_csv(report)}});
            return 0;
        }

        if (*sp_cmd) {
            ExperimentConfig cfg = load_config(sp_config);
            cfg.validate();
            const ConditionalModel model = make_model(cfg);
            const Dataset ds =
                sample_dataset(model, Design{cfg.dim}, sp_T, cfg.seed);
            const auto rows =
                sparsity_sweep(ds, cfg.kernel, cfg.q, sp_lambda, sp_grid, model,
                               cfg.r_norm, cfg.n_mc, mix_seed(cfg.seed, 17));
            write_with_manifest(
                sp_out, config_to_json(cfg), cfg.seed,
                {{"sparsity.json", sparsity_rows_to_json(rows).dump(2) + "\n"},
                 {"sparsity.csv", sparsity_rows_to_csv(rows)}});
            return 0;
        }

        if (*verify_cmd) {
            bool all_pass = true;
            for (const CheckResult& c : verify_all(verify_mc, verify_seed)) {
                std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name;
                if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
                std::cout << "\n";
                all_pass = all_pass && c.pass;
            }
            return all_pass ? 0 : 1;
        }

        if (*calc_cmd) {
            rp.p = parse_inf(calc_p, "--p");
            rp.eta = parse_inf(calc_eta, "--eta");
            const RateExponent re = rate_exponent(rp);
            json j;
            j["theta"] = re.theta;
            j["r"] = re.r;
            j["vartheta"] = re.vartheta;
            j["lambda_exp"] = re.lambda_exp;
            j["constraint_ok"] = re.constraint_ok;
            std::cout << j.dump(2) << "\n";
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace qtube
