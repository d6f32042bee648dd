#include "qtube/io.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qtube {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

json inf_aware(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

double parse_inf_aware(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf")
            return std::numeric_limits<double>::infinity();
        throw std::invalid_argument("expected number or \"inf\"");
    }
    return j.get<double>();
}

json kernel_to_json(const KernelSpec& k) {
    switch (k.kind) {
        case KernelKind::gaussian:
            return {{"kind", "gaussian"}, {"bandwidth", k.bandwidth}};
        case KernelKind::polynomial:
            return {{"kind", "polynomial"}, {"degree", k.degree}, {"offset", k.offset}};
        case KernelKind::linear:
            return {{"kind", "linear"}};
    }
    return {};
}

KernelSpec kernel_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") return KernelSpec::gaussian(j.at("bandwidth").get<double>());
    if (kind == "polynomial")
        return KernelSpec::polynomial(j.at("degree").get<int>(),
                                      j.at("offset").get<double>());
    if (kind == "linear") return KernelSpec::linear();
    throw std::invalid_argument("unknown kernel kind: " + kind);
}

} // namespace

std::string dataset_to_csv(const Dataset& dataset) {
    if (dataset.xs.empty()) throw std::invalid_argument("dataset_to_csv: empty dataset");
    const int dim = static_cast<int>(dataset.xs.front().size());
    std::ostringstream os;
    for (int d = 0; d < dim; ++d) os << "x_" << d << ",";
    os << "y\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (int d = 0; d < dim; ++d) os << fmt(dataset.xs[i](d)) << ",";
        os << fmt(dataset.ys[i]) << "\n";
    }
    return os.str();
}

Dataset dataset_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("csv: empty input");
    int dim = 0;
    {
        std::istringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (col == "y") break;
            ++dim;
        }
    }
    if (dim < 1) throw std::invalid_argument("csv: bad header");
    Dataset ds;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        Point x(dim);
        for (int d = 0; d < dim; ++d) {
            if (!std::getline(ls, cell, ','))
                throw std::invalid_argument("csv: short row");
            x(d) = std::stod(cell);
        }
        if (!std::getline(ls, cell, ','))
            throw std::invalid_argument("csv: missing y");
        ds.xs.push_back(x);
        ds.ys.push_back(std::stod(cell));
    }
    return ds;
}

json fit_result_to_json(const FitResult& r) {
    json j;
    j["coeffs"] = std::vector<double>(r.expansion.coeffs.begin(),
                                      r.expansion.coeffs.end());
    j["residuals"] = std::vector<double>(r.residuals.begin(), r.residuals.end());
    j["support"] = r.support;
    j["objective_trace"] = r.objective_trace;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["rkhs_norm_sq"] = r.rkhs_norm_sq;
    return j;
}

json rate_report_to_json(const RateReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"T", r.T},
                        {"lambda", r.lambda},
                        {"eps", r.eps},
                        {"mean_err", r.mean_err},
                        {"std_err", r.std_err},
                        {"sparsity", r.sparsity},
                        {"per_repeat", r.per_repeat}});
    }
    return {{"rows", rows},
            {"fitted_slope", report.fitted_slope},
            {"slope_stderr", report.slope_stderr},
            {"theoretical_lambda", report.theoretical_lambda},
            {"constraint_ok", report.constraint_ok}};
}

std::string rate_report_to_csv(const RateReport& report) {
    std::ostringstream os;
    os << "T,lambda,eps,mean_err,std_err,sparsity\n";
    for (const auto& r : report.rows)
        os << r.T << "," << fmt(r.lambda) << "," << fmt(r.eps) << ","
           << fmt(r.mean_err) << "," << fmt(r.std_err) << "," << fmt(r.sparsity)
           << "\n";
    return os.str();
}

json sparsity_rows_to_json(const std::vector<SparsityRow>& rows) {
    json j = json::array();
    for (const auto& r : rows)
        j.push_back({{"eps", r.eps},
                     {"sparsity", r.sparsity},
                     {"objective", r.objective},
                     {"lr_error", r.lr_error}});
    return j;
}

std::string sparsity_rows_to_csv(const std::vector<SparsityRow>& rows) {
    std::ostringstream os;
    os << "eps,sparsity,objective,lr_error\n";
    for (const auto& r : rows)
        os << fmt(r.eps) << "," << fmt(r.sparsity) << "," << fmt(r.objective)
           << "," << fmt(r.lr_error) << "\n";
    return os.str();
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["model"] = {{"kind", c.model_kind},
                  {"phi", c.phi},
                  {"sigma", c.sigma},
                  {"halfwidth", c.halfwidth}};
    j["dim"] = c.dim;
    j["kernel"] = kernel_to_json(c.kernel);
    j["q"] = c.q;
    j["alpha"] = c.alpha;
    j["eta"] = inf_aware(c.eta);
    j["T_grid"] = c.T_grid;
    j["repeats"] = c.repeats;
    j["seed"] = c.seed;
    j["r_norm"] = inf_aware(c.r_norm);
    j["n_mc"] = c.n_mc;
    j["beta"] = c.beta;
    j["k"] = c.k;
    j["xi"] = c.xi;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("model")) {
        const auto& m = j.at("model");
        c.model_kind = m.value("kind", c.model_kind);
        c.phi = m.value("phi", c.phi);
        c.sigma = m.value("sigma", c.sigma);
        c.halfwidth = m.value("halfwidth", c.halfwidth);
    }
    c.dim = j.value("dim", c.dim);
    if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
    c.q = j.value("q", c.q);
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("eta")) c.eta = parse_inf_aware(j.at("eta"));
    if (j.contains("T_grid")) c.T_grid = j.at("T_grid").get<std::vector<int>>();
    c.repeats = j.value("repeats", c.repeats);
    c.seed = j.value("seed", c.seed);
    if (j.contains("r_norm")) c.r_norm = parse_inf_aware(j.at("r_norm"));
    c.n_mc = j.value("n_mc", c.n_mc);
    c.beta = j.value("beta", c.beta);
    c.k = j.value("k", c.k);
    c.xi = j.value("xi", c.xi);
    return c;
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

json make_manifest(const json& config, std::uint64_t seed,
                   const std::vector<std::string>& outputs) {
    const auto now = std::chrono::system_clock::now();
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
            .count();
    json j;
    j["config_hash"] = fnv1a(config.dump());
    j["tool_version"] = "0.1.0";
    j["seed"] = seed;
    j["timestamp_unix"] = secs;
    j["outputs"] = outputs;
    return j;
}

} // namespace qtube
