#include "ivtest/ivtest.h"

#include <chrono>
#include <cstring>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bootstrap.hpp"
#include "csv.hpp"
#include "report.hpp"
#include "simulation.hpp"
#include "types.hpp"

using namespace ivtest;

namespace {

thread_local std::string g_last_error;

ivt_status fail(ivt_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
ivt_status guarded(Fn&& fn) {
    try {
        fn();
        return IVT_OK;
    } catch (const DataError& e) {
        return fail(IVT_ERR_DATA, e.what());
    } catch (const ConfigError& e) {
        return fail(IVT_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(IVT_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(IVT_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

}  // namespace

struct ivt_dataset {
    Dataset data;
};

struct ivt_config {
    TestConfig config;
};

struct ivt_result {
    Dataset data;  // summary source for the report
    TestConfig config;
    NuMeasure nu;
    TestResult result;
    double elapsed_seconds = 0.0;
};

extern "C" {

const char* ivt_version(void) { return kToolVersion; }

const char* ivt_last_error(void) { return g_last_error.c_str(); }

void ivt_string_free(char* s) { delete[] s; }

ivt_status ivt_dataset_read_csv(const char* path, const char* y_col, const char* d_col,
                                const char* z_col, const char* x_cols, ivt_dataset** out) {
    if (!path || !y_col || !d_col || !z_col || !out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        ColumnMap map;
        map.y = y_col;
        map.d = d_col;
        map.z = z_col;
        if (x_cols && *x_cols) {
            std::stringstream ss(x_cols);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) map.x.push_back(item);
            }
        }
        *out = new ivt_dataset{read_csv(path, map)};
    });
}

ivt_status ivt_dataset_from_rows(int64_t n, const double* y, const char* const* d,
                                 const char* const* z, const char* const* x, ivt_dataset** out) {
    if (!y || !d || !z || !out) return fail(IVT_ERR_ARG, "null argument");
    if (n < 1) return fail(IVT_ERR_DATA, "empty input: no observations");
    return guarded([&] {
        std::vector<Row> rows(static_cast<std::size_t>(n));
        for (int64_t i = 0; i < n; ++i) {
            auto& row = rows[static_cast<std::size_t>(i)];
            row.y = y[i];
            row.d = d[i];
            row.z = z[i];
            if (x) row.x = std::string(x[i]);
        }
        *out = new ivt_dataset{encode_dataset(rows)};
    });
}

void ivt_dataset_free(ivt_dataset* data) { delete data; }

int64_t ivt_dataset_n(const ivt_dataset* data) { return data ? data->data.n() : 0; }

int64_t ivt_dataset_levels(const ivt_dataset* data, char column) {
    if (!data) return 0;
    switch (column) {
        case 'd': return data->data.d_levels();
        case 'z': return data->data.z_levels();
        case 'x': return data->data.has_covariates() ? data->data.x_levels() : 0;
        default: return 0;
    }
}

ivt_config* ivt_config_new(void) { return new ivt_config{}; }

void ivt_config_free(ivt_config* config) { delete config; }

ivt_status ivt_config_set_mode(ivt_config* config, const char* mode) {
    if (!config || !mode) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] { config->config.mode = mode_from_string(mode); });
}

ivt_status ivt_config_set_tau(ivt_config* config, double tau) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    if (!(tau > 0.0)) return fail(IVT_ERR_CONFIG, "tau must be positive (or inf)");
    config->config.tau_n = tau;
    return IVT_OK;
}

ivt_status ivt_config_set_xi0(ivt_config* config, double xi0) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    if (!(xi0 > 0.0)) return fail(IVT_ERR_CONFIG, "xi0 must be positive");
    config->config.xi0 = xi0;
    return IVT_OK;
}

ivt_status ivt_config_set_eta(ivt_config* config, double eta) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    if (!(eta >= 0.0)) return fail(IVT_ERR_CONFIG, "eta must be nonnegative");
    config->config.eta = eta;
    return IVT_OK;
}

ivt_status ivt_config_set_alpha(ivt_config* config, double alpha) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    if (!(alpha > 0.0 && alpha < 1.0)) return fail(IVT_ERR_CONFIG, "alpha must lie in (0, 1)");
    config->config.alpha = alpha;
    return IVT_OK;
}

ivt_status ivt_config_set_bootstrap(ivt_config* config, int64_t n_bootstrap) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    if (n_bootstrap < 1) return fail(IVT_ERR_CONFIG, "bootstrap replication count must be >= 1");
    config->config.n_bootstrap = static_cast<int>(n_bootstrap);
    return IVT_OK;
}

ivt_status ivt_config_set_seed(ivt_config* config, uint64_t seed) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    config->config.seed = seed;
    return IVT_OK;
}

ivt_status ivt_config_set_threads(ivt_config* config, int threads) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    if (threads < 1) return fail(IVT_ERR_CONFIG, "threads must be >= 1");
    config->config.threads = threads;
    return IVT_OK;
}

ivt_status ivt_config_set_nu_dirac(ivt_config* config, double xi) {
    if (!config) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] { config->config.nu = NuMeasure::dirac(xi); });
}

ivt_status ivt_config_set_nu_grid(ivt_config* config, const double* xis, const double* weights,
                                  int64_t m) {
    if (!config || !xis) return fail(IVT_ERR_ARG, "null argument");
    if (m < 1) return fail(IVT_ERR_CONFIG, "nu measure needs at least one xi point");
    return guarded([&] {
        std::vector<double> pts(xis, xis + m);
        if (weights) {
            config->config.nu = NuMeasure::custom(std::move(pts), {weights, weights + m});
        } else {
            config->config.nu = NuMeasure::uniform(std::move(pts));
        }
    });
}

ivt_status ivt_config_set_nu_named(ivt_config* config, const char* name) {
    if (!config || !name) return fail(IVT_ERR_ARG, "null argument");
    const std::string s = name;
    if (s == "standard") {
        config->config.nu = NuMeasure::standard_grid();
        return IVT_OK;
    }
    if (s == "small") {
        config->config.nu = NuMeasure::small_grid();
        return IVT_OK;
    }
    return fail(IVT_ERR_CONFIG, "unknown nu grid '" + s + "' (expected standard or small)");
}

ivt_status ivt_config_add_c_triple(ivt_config* config, const char* d, const char* z,
                                   const char* z_prime) {
    if (!config || !d || !z || !z_prime) return fail(IVT_ERR_ARG, "null argument");
    config->config.c_set.push_back({d, z, z_prime});
    return IVT_OK;
}

ivt_status ivt_config_set_instrument_order(ivt_config* config, const char* const* labels,
                                           int64_t k) {
    if (!config || !labels) return fail(IVT_ERR_ARG, "null argument");
    config->config.instrument_order.assign(labels, labels + k);
    return IVT_OK;
}

ivt_status ivt_run_test(const ivt_dataset* data, const ivt_config* config, ivt_result** out) {
    if (!data || !config || !out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        const auto start = std::chrono::steady_clock::now();
        const TestConfig& cfg = config->config;
        TestResult result = run_test(data->data, cfg);
        const auto stop = std::chrono::steady_clock::now();
        auto* res = new ivt_result;
        res->data = data->data;
        res->config = cfg;
        res->nu.points = result.xi;
        res->nu.weights = result.nu_weights;
        res->result = std::move(result);
        res->elapsed_seconds = std::chrono::duration<double>(stop - start).count();
        *out = res;
    });
}

void ivt_result_free(ivt_result* result) { delete result; }

double ivt_result_ts(const ivt_result* result) { return result->result.ts; }
double ivt_result_critical_value(const ivt_result* result) {
    return result->result.critical_value;
}
double ivt_result_p_value(const ivt_result* result) { return result->result.p_value; }
int ivt_result_reject(const ivt_result* result) { return result->result.reject ? 1 : 0; }
double ivt_result_lambda_hat(const ivt_result* result) { return result->result.lambda_hat; }
double ivt_result_t_n(const ivt_result* result) { return result->result.t_n; }
uint64_t ivt_result_contact_set_size(const ivt_result* result) {
    return result->result.contact_set_size;
}
int64_t ivt_result_n_xi(const ivt_result* result) {
    return static_cast<int64_t>(result->result.xi.size());
}
double ivt_result_xi(const ivt_result* result, int64_t i) {
    return result->result.xi.at(static_cast<std::size_t>(i));
}
double ivt_result_sup(const ivt_result* result, int64_t i) {
    return result->result.per_xi_sup.at(static_cast<std::size_t>(i));
}

ivt_status ivt_result_report_json(const ivt_result* result, int include_timing, char** out) {
    if (!result || !out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        const auto j = report_to_json(result->data, result->config, result->nu, result->result,
                                      result->elapsed_seconds, include_timing != 0);
        *out = dup_string(j.dump(2) + "\n");
    });
}

ivt_status ivt_result_report_text(const ivt_result* result, char** out) {
    if (!result || !out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        *out = dup_string(report_to_text(result->data, result->config, result->nu, result->result,
                                         result->elapsed_seconds));
    });
}

ivt_status ivt_dgp_names(char** out) {
    if (!out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& e : dgp_catalog()) {
            arr.push_back({{"name", e.name}, {"title", e.title}, {"mode", to_string(e.mode)}});
        }
        *out = dup_string(arr.dump(2) + "\n");
    });
}

ivt_status ivt_table_names(char** out) {
    if (!out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        nlohmann::ordered_json arr = table_ids();
        *out = dup_string(arr.dump(2) + "\n");
    });
}

ivt_status ivt_simulate_dgp(const char* dgp, int64_t n, double r, const ivt_config* config,
                            int64_t n_mc, char** out) {
    if (!dgp || !config || !out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        const DgpCatalogEntry* entry = find_dgp(dgp);
        if (!entry) throw ConfigError("unknown DGP '" + std::string(dgp) + "'");
        if (n_mc < 1) throw ConfigError("simulation needs at least one Monte Carlo iteration");
        const WarpSingle w =
            warp_speed_mc(*entry, config->config, static_cast<int>(n_mc), n, r);
        nlohmann::ordered_json j;
        j["dgp"] = entry->name;
        j["title"] = entry->title;
        j["mode"] = to_string(entry->mode);
        j["n"] = n;
        j["r"] = r < 0 ? entry->default_r : r;
        j["n_mc"] = w.n_mc;
        j["tau"] = std::isinf(config->config.tau_n) ? nlohmann::ordered_json("inf")
                                                    : nlohmann::ordered_json(config->config.tau_n);
        const NuMeasure& nu =
            config->config.nu.empty() ? entry->default_grid : config->config.nu;
        j["nu"] = {{"points", nu.points}, {"weights", nu.weights}};
        j["alpha"] = config->config.alpha;
        j["seed"] = config->config.seed;
        j["rejection_rate"] = w.rate;
        j["mc_se"] = w.mc_se;
        j["pooled_critical_value"] = w.pooled_critical;
        j["bootstrap_draws"] = w.bootstrap_draws;
        *out = dup_string(j.dump(2) + "\n");
    });
}

namespace {

std::string table_to_text(const TableResult& t) {
    std::ostringstream os;
    os << t.id << ": " << t.title << "\n";
    if (t.n > 0) os << "n = " << t.n << ", ";
    os << "alpha = " << t.alpha << ", seed = " << t.seed << "\n";
    std::size_t label_w = 6;
    for (const auto& r : t.row_labels) label_w = std::max(label_w, r.size());
    os << std::string(label_w, ' ');
    for (const auto& c : t.col_labels) {
        os << "  " << c;
        if (c.size() < 12) os << std::string(12 - c.size(), ' ');
    }
    os << "\n";
    char buf[64];
    for (std::size_t i = 0; i < t.row_labels.size(); ++i) {
        os << t.row_labels[i];
        if (t.row_labels[i].size() < label_w) {
            os << std::string(label_w - t.row_labels[i].size(), ' ');
        }
        for (const auto& cell : t.cells[i]) {
            std::snprintf(buf, sizeof(buf), "  %.3f(%.3f)", cell.rate, cell.mc_se);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

nlohmann::ordered_json table_to_json(const TableResult& t) {
    nlohmann::ordered_json j;
    j["table"] = t.id;
    j["title"] = t.title;
    if (t.n > 0) j["n"] = t.n;
    j["alpha"] = t.alpha;
    j["seed"] = t.seed;
    j["columns"] = t.col_labels;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < t.row_labels.size(); ++i) {
        nlohmann::ordered_json row;
        row["label"] = t.row_labels[i];
        auto cells = nlohmann::ordered_json::array();
        for (const auto& cell : t.cells[i]) {
            cells.push_back({{"rate", cell.rate}, {"mc_se", cell.mc_se}, {"n_mc", cell.n_mc}});
        }
        row["cells"] = cells;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

}  // namespace

ivt_status ivt_simulate_table(const char* table_id, int64_t n_mc, int64_t n_override,
                              uint64_t seed, int threads, int as_text, char** out) {
    if (!table_id || !out) return fail(IVT_ERR_ARG, "null argument");
    return guarded([&] {
        const TableResult t = reproduce_table(table_id, static_cast<int>(n_mc), n_override, seed,
                                              threads < 1 ? 1 : threads);
        if (as_text) {
            *out = dup_string(table_to_text(t));
        } else {
            *out = dup_string(table_to_json(t).dump(2) + "\n");
        }
    });
}

}  // extern "C"
