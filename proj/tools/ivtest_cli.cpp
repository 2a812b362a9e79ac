// Command-line front end for the ivtest shared library. All functionality is
// reached through the C API in ivtest/ivtest.h.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivtest/ivtest.h"

namespace {

int fail_with(ivt_status status) {
    std::fprintf(stderr, "error: %s\n", ivt_last_error());
    switch (status) {
        case IVT_ERR_DATA: return 2;
        case IVT_ERR_CONFIG: return 3;
        default: return 1;
    }
}

#define CHECK(call)                                   \
    do {                                              \
        const ivt_status status__ = (call);           \
        if (status__ != IVT_OK) return fail_with(status__); \
    } while (0)

// Grid spec: comma-separated scalars or start:stop:step ranges, e.g.
// "0.07:0.28:0.03,0.3,1".
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> points;
    std::string item;
    std::stringstream ss(spec);
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto c1 = item.find(':');
        if (c1 == std::string::npos) {
            points.push_back(std::stod(item));
            continue;
        }
        const auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string::npos) {
            throw CLI::ValidationError("--xi-grid", "range must be start:stop:step");
        }
        const double start = std::stod(item.substr(0, c1));
        const double stop = std::stod(item.substr(c1 + 1, c2 - c1 - 1));
        const double step = std::stod(item.substr(c2 + 1));
        if (!(step > 0.0)) throw CLI::ValidationError("--xi-grid", "step must be positive");
        for (double v = start; v <= stop + 1e-12; v += step) points.push_back(v);
    }
    return points;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_tau(const std::string& s) {
    if (s == "inf" || s == "Inf" || s == "INF") return std::numeric_limits<double>::infinity();
    return std::stod(s);
}

struct NuOptions {
    std::string nu_kind;  // "", dirac, uniform, custom
    double xi = 0.0;
    bool xi_given = false;
    std::string xi_grid;
    std::string xi_weights;
};

// Applies the trimming-measure flags to a config. Leaves the library default
// in place when nothing was requested.
ivt_status apply_nu(ivt_config* config, const NuOptions& opt) {
    if (opt.xi_given) {
        if (!opt.xi_grid.empty()) {
            std::fprintf(stderr, "error: give either --xi or --xi-grid, not both\n");
            return IVT_ERR_CONFIG;
        }
        return ivt_config_set_nu_dirac(config, opt.xi);
    }
    if (!opt.xi_grid.empty()) {
        const auto points = parse_grid(opt.xi_grid);
        if (!opt.xi_weights.empty()) {
            std::vector<double> weights;
            for (const auto& w : split_commas(opt.xi_weights)) weights.push_back(std::stod(w));
            if (weights.size() != points.size()) {
                std::fprintf(stderr, "error: --xi-weights length must match the grid\n");
                return IVT_ERR_CONFIG;
            }
            return ivt_config_set_nu_grid(config, points.data(), weights.data(),
                                          static_cast<int64_t>(points.size()));
        }
        return ivt_config_set_nu_grid(config, points.data(), nullptr,
                                      static_cast<int64_t>(points.size()));
    }
    if (opt.nu_kind == "uniform") return ivt_config_set_nu_named(config, "standard");
    if (opt.nu_kind == "dirac") {
        std::fprintf(stderr, "error: --nu dirac requires --xi\n");
        return IVT_ERR_CONFIG;
    }
    if (opt.nu_kind == "custom") {
        std::fprintf(stderr, "error: --nu custom requires --xi-grid\n");
        return IVT_ERR_CONFIG;
    }
    return IVT_OK;
}

struct ConfigOwner {
    ivt_config* ptr = ivt_config_new();
    ~ConfigOwner() { ivt_config_free(ptr); }
};

struct StringOwner {
    char* ptr = nullptr;
    ~StringOwner() { ivt_string_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ivtest — bootstrap test of instrument validity for multivalued, unordered and "
                 "covariate-conditional treatments"};
    app.require_subcommand(1);

    // ---- test ----
    auto* test = app.add_subcommand("test", "run the validity test on a CSV dataset");
    std::string csv_path, y_col, d_col, z_col, covariates, mode = "ordered", c_set_spec,
                instrument_order, tau_spec = "2";
    NuOptions nu;
    double xi0 = 0.001, eta = 0.0, alpha = 0.05;
    std::uint64_t seed = 0;
    int n_bootstrap = 1000, threads = 1;
    bool as_json = false, with_timing = false;

    test->add_option("--csv", csv_path, "input CSV file (header row required)")->required();
    test->add_option("--y", y_col, "outcome column")->required();
    test->add_option("--d", d_col, "treatment column")->required();
    test->add_option("--z", z_col, "instrument column")->required();
    test->add_option("--covariates", covariates, "comma-separated covariate columns");
    test->add_option("--mode", mode,
                     "ordered | unordered | binary | ordered-with-covariates | "
                     "unordered-with-covariates");
    test->add_option("--c-set", c_set_spec, "unordered triples d:z:z', comma separated");
    test->add_option("--instrument-order", instrument_order,
                     "explicit instrument ordering, comma separated");
    test->add_option("--xi", nu.xi, "Dirac trimming point")->each([&](const std::string&) {
        nu.xi_given = true;
    });
    test->add_option("--xi-grid", nu.xi_grid, "grid items: scalars and start:stop:step ranges");
    test->add_option("--xi-weights", nu.xi_weights, "weights matching --xi-grid");
    test->add_option("--nu", nu.nu_kind, "dirac | uniform | custom");
    test->add_option("--tau", tau_spec, "contact-set threshold (number or 'inf', default 2)");
    test->add_option("--xi0", xi0, "contact-set trimming constant (default 0.001)");
    test->add_option("--eta", eta, "critical-value floor (default 0)");
    test->add_option("--bootstrap", n_bootstrap, "bootstrap replications (default 1000)");
    test->add_option("--alpha", alpha, "nominal level (default 0.05)");
    test->add_option("--seed", seed, "RNG seed");
    test->add_option("--threads", threads, "worker threads")->envname("IVTEST_THREADS");
    test->add_flag("--json", as_json, "emit the JSON report on stdout");
    test->add_flag("--timing", with_timing, "include timing in the JSON report");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "run a warp-speed Monte Carlo study");
    std::string dgp_name, table_id, sim_tau = "2";
    NuOptions sim_nu;
    std::int64_t sim_n = 1000;
    double sim_r = -1.0, sim_xi0 = 0.001, sim_alpha = 0.05, sim_eta = 0.0;
    int mc = 200, sim_threads = 1;
    std::uint64_t sim_seed = 0;
    bool sim_json = false, sim_text = false;

    sim->add_option("--dgp", dgp_name, "design name (see 'ivtest list')");
    sim->add_option("--table", table_id, "table id (see 'ivtest list')");
    sim->add_option("--n", sim_n, "sample size per iteration (table: overrides design sizes)");
    sim->add_option("--r", sim_r, "instrument mixing share (design default when omitted)");
    sim->add_option("--mc", mc, "Monte Carlo iterations");
    sim->add_option("--xi", sim_nu.xi, "Dirac trimming point")->each([&](const std::string&) {
        sim_nu.xi_given = true;
    });
    sim->add_option("--xi-grid", sim_nu.xi_grid, "grid items");
    sim->add_option("--xi-weights", sim_nu.xi_weights, "weights matching --xi-grid");
    sim->add_option("--nu", sim_nu.nu_kind, "dirac | uniform | custom");
    sim->add_option("--tau", sim_tau, "contact-set threshold (number or 'inf')");
    sim->add_option("--xi0", sim_xi0, "contact-set trimming constant");
    sim->add_option("--alpha", sim_alpha, "nominal level");
    sim->add_option("--eta", sim_eta, "critical-value floor");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--threads", sim_threads, "worker threads")->envname("IVTEST_THREADS");
    sim->add_flag("--json", sim_json, "JSON output (default for --dgp)");
    sim->add_flag("--text", sim_text, "aligned-text output (default for --table)");

    // ---- list ----
    auto* list = app.add_subcommand("list", "list simulation designs and tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;  // flag misuse is a configuration error
    }

    if (list->parsed()) {
        StringOwner dgps, tables;
        CHECK(ivt_dgp_names(&dgps.ptr));
        CHECK(ivt_table_names(&tables.ptr));
        std::printf("designs:\n%s\ntables:\n%s", dgps.ptr, tables.ptr);
        return 0;
    }

    if (test->parsed()) {
        ivt_dataset* data = nullptr;
        CHECK(ivt_dataset_read_csv(csv_path.c_str(), y_col.c_str(), d_col.c_str(), z_col.c_str(),
                                   covariates.empty() ? nullptr : covariates.c_str(), &data));
        ConfigOwner config;
        CHECK(ivt_config_set_mode(config.ptr, mode.c_str()));
        double tau;
        try {
            tau = parse_tau(tau_spec);
        } catch (const std::exception&) {
            std::fprintf(stderr, "error: bad --tau value '%s'\n", tau_spec.c_str());
            ivt_dataset_free(data);
            return 3;
        }
        CHECK(ivt_config_set_tau(config.ptr, tau));
        CHECK(ivt_config_set_xi0(config.ptr, xi0));
        CHECK(ivt_config_set_eta(config.ptr, eta));
        CHECK(ivt_config_set_alpha(config.ptr, alpha));
        CHECK(ivt_config_set_bootstrap(config.ptr, n_bootstrap));
        CHECK(ivt_config_set_seed(config.ptr, seed));
        CHECK(ivt_config_set_threads(config.ptr, threads));
        CHECK(apply_nu(config.ptr, nu));
        for (const auto& triple : split_commas(c_set_spec)) {
            const auto p1 = triple.find(':');
            const auto p2 = triple.find(':', p1 + 1);
            if (p1 == std::string::npos || p2 == std::string::npos) {
                std::fprintf(stderr, "error: --c-set entries must look like d:z:z'\n");
                ivt_dataset_free(data);
                return 3;
            }
            CHECK(ivt_config_add_c_triple(config.ptr, triple.substr(0, p1).c_str(),
                                          triple.substr(p1 + 1, p2 - p1 - 1).c_str(),
                                          triple.substr(p2 + 1).c_str()));
        }
        if (!instrument_order.empty()) {
            const auto labels = split_commas(instrument_order);
            std::vector<const char*> ptrs;
            for (const auto& l : labels) ptrs.push_back(l.c_str());
            CHECK(ivt_config_set_instrument_order(config.ptr, ptrs.data(),
                                                  static_cast<int64_t>(ptrs.size())));
        }

        ivt_result* result = nullptr;
        const ivt_status status = ivt_run_test(data, config.ptr, &result);
        ivt_dataset_free(data);
        if (status != IVT_OK) return fail_with(status);

        StringOwner text;
        if (as_json) {
            CHECK(ivt_result_report_json(result, with_timing ? 1 : 0, &text.ptr));
        } else {
            CHECK(ivt_result_report_text(result, &text.ptr));
        }
        std::fputs(text.ptr, stdout);
        ivt_result_free(result);
        return 0;
    }

    // simulate
    if (dgp_name.empty() == table_id.empty()) {
        std::fprintf(stderr, "error: give exactly one of --dgp or --table\n");
        return 3;
    }
    if (!table_id.empty()) {
        const bool n_given = sim->count("--n") > 0;
        StringOwner text;
        CHECK(ivt_simulate_table(table_id.c_str(), mc, n_given ? sim_n : 0, sim_seed, sim_threads,
                                 sim_json ? 0 : 1, &text.ptr));
        std::fputs(text.ptr, stdout);
        return 0;
    }

    ConfigOwner config;
    double tau;
    try {
        tau = parse_tau(sim_tau);
    } catch (const std::exception&) {
        std::fprintf(stderr, "error: bad --tau value '%s'\n", sim_tau.c_str());
        return 3;
    }
    CHECK(ivt_config_set_tau(config.ptr, tau));
    CHECK(ivt_config_set_xi0(config.ptr, sim_xi0));
    CHECK(ivt_config_set_alpha(config.ptr, sim_alpha));
    CHECK(ivt_config_set_eta(config.ptr, sim_eta));
    CHECK(ivt_config_set_seed(config.ptr, sim_seed));
    CHECK(ivt_config_set_threads(config.ptr, sim_threads));
    CHECK(apply_nu(config.ptr, sim_nu));
    StringOwner text;
    CHECK(ivt_simulate_dgp(dgp_name.c_str(), sim_n, sim_r, config.ptr, mc, &text.ptr));
    std::fputs(text.ptr, stdout);
    (void)sim_text;
    return 0;
}
