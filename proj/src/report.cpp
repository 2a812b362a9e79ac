#include "report.hpp"

#include <cmath>
#include <sstream>

namespace ivtest {

namespace {

nlohmann::ordered_json tau_to_json(double tau) {
    if (std::isinf(tau)) return "inf";
    return tau;
}

nlohmann::ordered_json level_summary(const std::vector<std::string>& labels,
                                     const std::vector<std::int32_t>& codes) {
    std::vector<std::int64_t> counts(labels.size(), 0);
    for (auto c : codes) counts[static_cast<std::size_t>(c)]++;
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out.push_back({{"label", labels[i]}, {"count", counts[i]}});
    }
    return out;
}

nlohmann::ordered_json argmax_to_json(const SupArgmax& a) {
    nlohmann::ordered_json j;
    if (a.is_fosd) {
        j["kind"] = "cdf-threshold";
        j["pair"] = a.pair;
        j["threshold_code"] = a.d_code;
    } else {
        j["kind"] = a.empty_interval ? "interval-empty" : "interval";
        j["pair"] = a.pair;
        j["d_code"] = a.d_code;
        j["sign"] = a.sign;
        j["interval"] = {a.lo, a.hi};
    }
    return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const Dataset& data, const TestConfig& config,
                                      const NuMeasure& nu, const TestResult& result,
                                      double elapsed_seconds, bool include_timing) {
    nlohmann::ordered_json j;
    j["tool"] = {{"name", "ivtest"}, {"version", kToolVersion}};

    nlohmann::ordered_json cfg;
    cfg["mode"] = to_string(config.mode);
    cfg["tau"] = tau_to_json(config.tau_n);
    cfg["xi0"] = config.xi0;
    cfg["n_bootstrap"] = config.n_bootstrap;
    cfg["alpha"] = config.alpha;
    cfg["eta"] = config.eta;
    cfg["seed"] = config.seed;
    if (!config.c_set.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& t : config.c_set) arr.push_back({t.d, t.z, t.z_prime});
        cfg["c_set"] = arr;
    }
    if (!config.instrument_order.empty()) cfg["instrument_order"] = config.instrument_order;
    j["config"] = cfg;

    j["nu"] = {{"points", nu.points}, {"weights", nu.weights}};

    nlohmann::ordered_json ds;
    ds["n"] = data.n();
    ds["d"] = level_summary(data.d_labels, data.d);
    ds["z"] = level_summary(data.z_labels, data.z);
    if (data.has_covariates()) ds["x"] = level_summary(data.x_labels, data.x);
    j["dataset"] = ds;

    nlohmann::ordered_json res;
    res["ts"] = result.ts;
    res["critical_value"] = result.critical_value;
    res["p_value"] = result.p_value;
    res["reject"] = result.reject;
    res["lambda_hat"] = result.lambda_hat;
    res["t_n"] = result.t_n;
    res["contact_set_size"] = result.contact_set_size;
    res["sigma_bound"] = result.sigma_bound;
    res["xi_covers_bound"] = result.xi_covers_bound;
    auto per_xi = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.xi.size(); ++i) {
        nlohmann::ordered_json e;
        e["xi"] = result.xi[i];
        e["sup"] = result.per_xi_sup[i];
        if (i < result.per_xi_argmax.size()) e["argmax"] = argmax_to_json(result.per_xi_argmax[i]);
        per_xi.push_back(e);
    }
    res["per_xi"] = per_xi;
    res["bootstrap_stats"] = result.bootstrap_stats;
    j["result"] = res;

    j["warnings"] = result.warnings;
    if (include_timing) j["timing_seconds"] = elapsed_seconds;
    return j;
}

std::string report_to_text(const Dataset& data, const TestConfig& config, const NuMeasure& nu,
                           const TestResult& result, double elapsed_seconds) {
    std::ostringstream out;
    out << "ivtest " << kToolVersion << " — instrument validity test\n";
    out << "mode: " << to_string(config.mode) << ", n = " << data.n()
        << ", treatment levels = " << data.d_levels() << ", instrument levels = " << data.z_levels();
    if (data.has_covariates()) out << ", covariate cells = " << data.x_levels();
    out << "\n";
    out << "tau = ";
    if (std::isinf(config.tau_n)) {
        out << "inf";
    } else {
        out << config.tau_n;
    }
    out << ", xi0 = " << config.xi0 << ", bootstrap = " << config.n_bootstrap
        << ", alpha = " << config.alpha << ", seed = " << config.seed << "\n";
    out << "lambda_hat = " << result.lambda_hat << ", T_n = " << result.t_n
        << ", sigma bound = " << result.sigma_bound << "\n";
    out << "contact set size = " << result.contact_set_size << "\n";
    out << "per-xi suprema:\n";
    for (std::size_t i = 0; i < result.xi.size(); ++i) {
        out << "  xi = " << result.xi[i] << " (weight " << nu.weights[i]
            << "): sup = " << result.per_xi_sup[i] << "\n";
    }
    out << "TS = " << result.ts << ", critical value = " << result.critical_value
        << ", p-value = " << result.p_value << "\n";
    out << "decision: " << (result.reject ? "REJECT validity" : "do not reject validity") << "\n";
    for (const auto& w : result.warnings) out << "warning: " << w << "\n";
    out << "elapsed: " << elapsed_seconds << " s\n";
    return out.str();
}

}  // namespace ivtest
