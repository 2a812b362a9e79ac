#include "simulation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "bootstrap.hpp"
#include "spaces.hpp"
#include "statistic.hpp"
#include "threading.hpp"

namespace ivtest {

namespace {

Dist normal(double mean, double sd) { return {{1.0, mean, sd}}; }

// Shared violation channels: shift, spread, squeeze, and a five-component
// mixture replacing one (d, z) outcome distribution.
Dist violation(int variant) {
    switch (variant) {
        case 1: return normal(-0.7, 1.0);
        case 2: return normal(0.0, 1.675);
        case 3: return normal(0.0, 0.515);
        case 4:
            return {{0.15, -1.0, 0.125},
                    {0.20, -0.5, 0.125},
                    {0.30, 0.0, 0.125},
                    {0.20, 0.5, 0.125},
                    {0.15, 1.0, 0.125}};
        default: throw ConfigError("unknown violation variant");
    }
}

std::vector<std::vector<Dist>> outcome_by_d(const std::vector<Dist>& per_d) {
    std::vector<std::vector<Dist>> out;
    out.reserve(per_d.size());
    for (const Dist& d : per_d) out.push_back({d});
    return out;
}

std::vector<std::vector<Dist>> outcome_table(int d_count, int z_count, const Dist& fill) {
    return std::vector<std::vector<Dist>>(static_cast<std::size_t>(d_count),
                                          std::vector<Dist>(static_cast<std::size_t>(z_count), fill));
}

std::vector<DgpCatalogEntry> make_catalog() {
    std::vector<DgpCatalogEntry> cat;

    const std::vector<CTriple> unordered_c = {{"a", "0", "1"}, {"b", "1", "0"}, {"c", "1", "0"}};
    const NuMeasure binary_grid = NuMeasure::uniform({0.07, 0.22, 0.30, 1.0});

    {
        DgpCatalogEntry e;
        e.name = "multivalued-null";
        e.title = "three-level treatment and instrument, valid instrument";
        e.mode = Mode::Ordered;
        e.d_count = 3;
        e.z_tri = true;
        e.d_of_z = {{0.33, 0.66}, {0.33, 0.66}, {0.33, 0.66}};
        e.y_dist = outcome_by_d({normal(0, 1), normal(1, 1), normal(2, 1)});
        e.default_grid = NuMeasure::standard_grid();
        cat.push_back(std::move(e));
    }
    for (int v = 1; v <= 4; ++v) {
        DgpCatalogEntry e;
        e.name = "dgp" + std::to_string(v);
        e.title = "three-level design, interval implication violated via the (d=2, z=0) outcome";
        e.mode = Mode::Ordered;
        e.d_count = 3;
        e.z_tri = true;
        e.d_of_z = {{0.45, 0.55}, {0.45, 0.55}, {0.45, 0.55}};
        e.y_depends_z = true;
        e.y_dist = outcome_table(3, 3, normal(0, 1));
        e.y_dist[2][0] = violation(v);
        e.default_grid = NuMeasure::standard_grid();
        cat.push_back(std::move(e));
    }
    {
        DgpCatalogEntry e;
        e.name = "dgp5";
        e.title = "three-level design, treatment monotonicity violated";
        e.mode = Mode::Ordered;
        e.d_count = 3;
        e.z_tri = true;
        e.d_of_z = {{0.60, 0.80}, {0.33, 0.66}, {0.33, 0.66}};
        e.y_dist = outcome_by_d({normal(0, 1), normal(1, 1), normal(2, 1)});
        e.default_grid = NuMeasure::standard_grid();
        cat.push_back(std::move(e));
    }
    {
        DgpCatalogEntry e;
        e.name = "dgp6";
        e.title = "three-level design, treatment monotonicity violated (reversed)";
        e.mode = Mode::Ordered;
        e.d_count = 3;
        e.z_tri = true;
        e.d_of_z = {{0.33, 0.66}, {0.60, 0.80}, {0.60, 0.80}};
        e.y_dist = outcome_by_d({normal(0, 1), normal(1, 1), normal(2, 1)});
        e.default_grid = NuMeasure::standard_grid();
        cat.push_back(std::move(e));
    }
    {
        DgpCatalogEntry e;
        e.name = "degenerate-null";
        e.title = "valid instrument with nearly identical potential treatments";
        e.mode = Mode::Ordered;
        e.d_count = 3;
        e.z_tri = true;
        e.d_of_z = {{0.328, 0.658}, {0.329, 0.659}, {0.330, 0.660}};
        e.y_dist = outcome_by_d({normal(0, 1), normal(1, 1), normal(2, 1)});
        e.default_grid = NuMeasure::standard_grid();
        cat.push_back(std::move(e));
    }

    {
        DgpCatalogEntry e;
        e.name = "unordered-null";
        e.title = "unordered three-level treatment with a binary conditioning covariate";
        e.mode = Mode::UnorderedCov;
        e.d_count = 3;
        e.unordered_labels = true;
        e.has_x = true;
        e.d_of_z = {{0.5, 0.6}, {0.5, 0.6}};
        e.y_dist = outcome_by_d({normal(0, 1), normal(1, 1), normal(2, 1)});
        e.c_set = unordered_c;
        e.default_grid = NuMeasure::small_grid();
        cat.push_back(std::move(e));
    }
    for (int v = 1; v <= 4; ++v) {
        DgpCatalogEntry e;
        e.name = "unordered-dgp" + std::to_string(v);
        e.title = "unordered design, implication violated via the (d=c, z=0) outcome";
        e.mode = Mode::UnorderedCov;
        e.d_count = 3;
        e.unordered_labels = true;
        e.has_x = true;
        e.d_of_z = {{0.5, 0.6}, {0.5, 0.6}};
        e.y_depends_z = true;
        e.y_dist = outcome_table(3, 2, normal(0, 1));
        e.y_dist[2][0] = violation(v);
        e.c_set = unordered_c;
        e.default_grid = NuMeasure::small_grid();
        cat.push_back(std::move(e));
    }
    {
        DgpCatalogEntry e;
        e.name = "unordered-dgp5";
        e.title = "unordered design, monotonicity violated";
        e.mode = Mode::UnorderedCov;
        e.d_count = 3;
        e.unordered_labels = true;
        e.has_x = true;
        e.d_of_z = {{0.5, 0.6}, {0.2, 0.3}};
        e.y_dist = outcome_by_d({normal(0, 1), normal(1, 1), normal(2, 1)});
        e.c_set = unordered_c;
        e.default_grid = NuMeasure::small_grid();
        cat.push_back(std::move(e));
    }

    {
        DgpCatalogEntry e;
        e.name = "binary-null";
        e.title = "binary treatment and instrument, valid instrument";
        e.mode = Mode::Binary;
        e.d_count = 2;
        e.d_of_z = {{0.5, 0.5}, {0.5, 0.5}};
        e.y_dist = outcome_by_d({normal(0, 1), normal(1, 1)});
        e.default_grid = binary_grid;
        cat.push_back(std::move(e));
    }
    for (int v = 1; v <= 4; ++v) {
        DgpCatalogEntry e;
        e.name = "binary-dgp" + std::to_string(v);
        e.title = "binary design, implication violated via the (d=1, z=0) outcome";
        e.mode = Mode::Binary;
        e.d_count = 2;
        e.d_of_z = {{0.45, 0.45}, {0.55, 0.55}};
        e.y_depends_z = true;
        e.y_dist = outcome_table(2, 2, normal(0, 1));
        e.y_dist[1][0] = violation(v);
        e.default_grid = binary_grid;
        cat.push_back(std::move(e));
    }
    {
        // Constant outcome with treatment pinned to the instrument: every
        // contrast is saturated, the contact set is empty, and the test
        // never rejects.
        DgpCatalogEntry e;
        e.name = "constant-null";
        e.title = "degenerate design with a constant outcome and deterministic treatment";
        e.mode = Mode::Binary;
        e.d_count = 2;
        e.d_of_z = {{0.0, 0.0}, {1.0, 1.0}};
        e.y_dist = outcome_by_d({normal(0, 0), normal(0, 0)});
        e.default_grid = binary_grid;
        cat.push_back(std::move(e));
    }
    return cat;
}

}  // namespace

const std::vector<DgpCatalogEntry>& dgp_catalog() {
    static const std::vector<DgpCatalogEntry> cat = make_catalog();
    return cat;
}

const DgpCatalogEntry* find_dgp(const std::string& name) {
    for (const auto& e : dgp_catalog()) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

std::vector<std::string> dgp_names() {
    std::vector<std::string> names;
    for (const auto& e : dgp_catalog()) names.push_back(e.name);
    return names;
}

Dataset generate(const DgpCatalogEntry& dgp, std::int64_t n, double r, Rng& rng) {
    if (n < 1) throw DataError("sample size must be >= 1");
    if (r < 0) r = dgp.default_r;
    static const char* kUnordered[3] = {"a", "b", "c"};

    std::vector<Row> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double u = rng.u01();
        int x = 0;
        if (dgp.has_x) x = rng.u01() <= 0.5 ? 1 : 0;
        const double v = rng.u01();

        int z;
        if (dgp.z_tri) {
            z = u <= r ? 2 : (u <= r + 0.2 ? 1 : 0);
        } else {
            z = u <= r ? 1 : 0;
        }
        const DzSpec& dz = dgp.d_of_z[static_cast<std::size_t>(z)];
        const int top = dgp.d_count - 1;
        const int d = v <= dz.cut_hi ? top : (v <= dz.cut_mid ? 1 : 0);

        const Dist& dist =
            dgp.y_dist[static_cast<std::size_t>(d)][dgp.y_depends_z ? static_cast<std::size_t>(z) : 0];
        const MixComp* comp = &dist[0];
        if (dist.size() > 1) {
            const double pick = rng.u01();
            double acc = 0.0;
            for (const MixComp& c : dist) {
                acc += c.w;
                comp = &c;
                if (pick <= acc) break;
            }
        }
        const double y = comp->sd == 0.0 ? comp->mean : rng.normal(comp->mean, comp->sd);

        Row row;
        row.y = y;
        row.d = dgp.unordered_labels ? kUnordered[d] : std::to_string(d);
        row.z = std::to_string(z);
        if (dgp.has_x) row.x = std::to_string(x);
        rows.push_back(std::move(row));
    }
    return encode_dataset(rows, {}, /*strict=*/false);
}

WarpOutcome run_warp(const WarpSpec& spec) {
    if (spec.n_mc < 1) throw ConfigError("warp-speed run needs at least one iteration");
    if (!spec.dgp) throw ConfigError("no design given");
    const DgpCatalogEntry& dgp = *spec.dgp;
    const NuMeasure grid = spec.grid.empty() ? dgp.default_grid : spec.grid;
    const auto n_xi = grid.points.size();
    const std::size_t n_cols = spec.per_point_columns ? n_xi + 1 : 1;
    const std::size_t n_tau = spec.taus.size();

    // TS[r][col] and TSB[r][tau][col], filled by iteration index.
    std::vector<std::vector<double>> ts(static_cast<std::size_t>(spec.n_mc),
                                        std::vector<double>(n_cols));
    std::vector<std::vector<std::vector<double>>> tsb(
        static_cast<std::size_t>(spec.n_mc),
        std::vector<std::vector<double>>(n_tau, std::vector<double>(n_cols)));

    auto columns_from = [&](const std::vector<double>& sup) {
        std::vector<double> cols(n_cols);
        if (spec.per_point_columns) {
            double weighted = 0.0;
            for (std::size_t j = 0; j < n_xi; ++j) {
                cols[j] = sup[j];
                weighted += grid.weights[j] * sup[j];
            }
            cols[n_xi] = weighted;
        } else {
            double weighted = 0.0;
            for (std::size_t j = 0; j < n_xi; ++j) weighted += grid.weights[j] * sup[j];
            cols[0] = weighted;
        }
        return cols;
    };

    parallel_for(spec.n_mc, spec.threads, [&](std::int64_t it) {
        Rng gen = Rng::substream(spec.seed, Rng::kDataGen, static_cast<std::uint64_t>(it));
        const Dataset data = generate(dgp, spec.n, spec.r, gen);

        PairFamily family;
        if (mode_is_ordered(dgp.mode)) {
            family = build_ordered_space(data, dgp.mode);
        } else {
            family = build_unordered_space(data, dgp.c_set, dgp.mode);
        }
        const StatisticCache cache = build_cache(data, family, grid.points);
        ts[static_cast<std::size_t>(it)] = columns_from(cache.per_xi_sup);

        std::vector<std::vector<std::uint8_t>> masks;
        std::vector<const std::uint8_t*> mask_ptrs;
        masks.reserve(n_tau);
        for (double tau : spec.taus) {
            masks.push_back(estimate_contact_set(cache, tau, spec.xi0));
            mask_ptrs.push_back(masks.back().data());
        }

        Rng boot = Rng::substream(spec.seed, Rng::kBootstrap, static_cast<std::uint64_t>(it));
        const auto weights = resample_weights(cache.n, boot);
        thread_local BootstrapScratch scratch;
        std::vector<std::vector<double>> sup;
        bootstrap_per_xi_sup(cache, mask_ptrs, weights, scratch, sup);
        for (std::size_t t = 0; t < n_tau; ++t) {
            tsb[static_cast<std::size_t>(it)][t] = columns_from(sup[t]);
        }
    });

    WarpOutcome out;
    out.xi = grid.points;
    out.has_weighted_column = spec.per_point_columns;
    out.n_mc = spec.n_mc;
    out.bootstrap_draws = static_cast<std::uint64_t>(spec.n_mc);  // one draw per iteration
    out.rate.assign(n_tau, std::vector<double>(n_cols, 0.0));
    out.mc_se = out.rate;
    out.pooled_critical = out.rate;

    std::vector<double> pooled(static_cast<std::size_t>(spec.n_mc));
    for (std::size_t t = 0; t < n_tau; ++t) {
        for (std::size_t c = 0; c < n_cols; ++c) {
            for (std::size_t r2 = 0; r2 < static_cast<std::size_t>(spec.n_mc); ++r2) {
                pooled[r2] = tsb[r2][t][c];
            }
            const double crit = critical_value(pooled, spec.alpha, spec.eta);
            std::int64_t rejections = 0;
            for (std::size_t r2 = 0; r2 < static_cast<std::size_t>(spec.n_mc); ++r2) {
                if (ts[r2][c] > crit) ++rejections;
            }
            const double rate = static_cast<double>(rejections) / static_cast<double>(spec.n_mc);
            out.rate[t][c] = rate;
            out.mc_se[t][c] = std::sqrt(rate * (1.0 - rate) / static_cast<double>(spec.n_mc));
            out.pooled_critical[t][c] = crit;
        }
    }
    return out;
}

WarpSingle warp_speed_mc(const DgpCatalogEntry& dgp, const TestConfig& config, int n_mc,
                         std::int64_t n, double r) {
    WarpSpec spec;
    spec.dgp = &dgp;
    spec.n = n;
    spec.r = r;
    spec.taus = {config.tau_n};
    spec.grid = config.nu;
    spec.per_point_columns = false;
    spec.xi0 = config.xi0;
    spec.alpha = config.alpha;
    spec.eta = config.eta;
    spec.seed = config.seed;
    spec.threads = config.threads;
    spec.n_mc = n_mc;
    const WarpOutcome out = run_warp(spec);
    return {out.rate[0][0], out.mc_se[0][0], out.pooled_critical[0][0], out.n_mc,
            out.bootstrap_draws};
}

namespace {

std::string format_tau(double tau) {
    if (std::isinf(tau)) return "inf";
    std::string s = std::to_string(tau);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::string format_xi(double xi) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", xi);
    return buf;
}

struct PowerRow {
    std::string dgp;
    std::int64_t n;
    double r;
};

// Sample sizes and instrument-mixing shares paired in the power designs.
const std::vector<std::pair<std::int64_t, double>> kPowerSizes = {
    {200, 0.5}, {600, 1.0 / 6.0}, {1000, 0.5}, {1100, 1.0 / 11.0}, {2000, 0.5}};

}  // namespace

std::vector<std::string> table_ids() {
    return {"table1",       "table2",       "degenerate-null-table", "unordered-h0",
            "unordered-h1", "binary-h0",    "binary-h1"};
}

TableResult reproduce_table(const std::string& table_id, int mc_iters, std::int64_t n_override,
                            std::uint64_t seed, int threads) {
    if (mc_iters < 1) throw ConfigError("table reproduction needs mc_iters >= 1");

    TableResult table;
    table.id = table_id;
    table.seed = seed;

    const std::vector<double> all_taus = {0.1, 0.5, 1.0, 2.0, 3.0, 4.0, kInf};
    const std::vector<double> binary_taus = {1.0, 2.0, 3.0, 4.0, kInf};

    auto tau_rows_table = [&](const std::string& dgp_name, std::int64_t default_n,
                              const std::vector<double>& taus, const std::string& title) {
        const DgpCatalogEntry* dgp = find_dgp(dgp_name);
        WarpSpec spec;
        spec.dgp = dgp;
        spec.n = n_override > 0 ? n_override : default_n;
        spec.taus = taus;
        spec.seed = seed;
        spec.threads = threads;
        spec.n_mc = mc_iters;
        const WarpOutcome out = run_warp(spec);

        table.title = title;
        table.n = spec.n;
        for (double xi : out.xi) table.col_labels.push_back(format_xi(xi));
        table.col_labels.push_back("nu_bar");
        for (std::size_t t = 0; t < taus.size(); ++t) {
            table.row_labels.push_back("tau=" + format_tau(taus[t]));
            std::vector<TableCell> row;
            for (std::size_t c = 0; c < out.rate[t].size(); ++c) {
                row.push_back({out.rate[t][c], out.mc_se[t][c], out.n_mc});
            }
            table.cells.push_back(std::move(row));
        }
    };

    auto power_table = [&](const std::vector<std::string>& dgps, const std::vector<double>& taus,
                           bool nu_bar_column, const std::string& title) {
        table.title = title;
        bool cols_done = false;
        for (const std::string& name : dgps) {
            const DgpCatalogEntry* dgp = find_dgp(name);
            for (const auto& [n_full, r] : kPowerSizes) {
                WarpSpec spec;
                spec.dgp = dgp;
                spec.n = n_override > 0 ? n_override : n_full;
                spec.r = r;
                spec.taus = taus;
                spec.seed = seed;
                spec.threads = threads;
                spec.n_mc = mc_iters;
                const WarpOutcome out = run_warp(spec);

                if (!cols_done) {
                    for (double tau : taus) {
                        const std::string suffix =
                            taus.size() > 1 ? " (tau=" + format_tau(tau) + ")" : "";
                        for (double xi : out.xi) table.col_labels.push_back(format_xi(xi) + suffix);
                        if (nu_bar_column) table.col_labels.push_back("nu_bar" + suffix);
                    }
                    cols_done = true;
                }
                table.row_labels.push_back(name + " n=" + std::to_string(spec.n));
                std::vector<TableCell> row;
                for (std::size_t t = 0; t < taus.size(); ++t) {
                    const std::size_t limit =
                        nu_bar_column ? out.rate[t].size() : out.rate[t].size() - 1;
                    for (std::size_t c = 0; c < limit; ++c) {
                        row.push_back({out.rate[t][c], out.mc_se[t][c], out.n_mc});
                    }
                }
                table.cells.push_back(std::move(row));
                if (n_override > 0) break;  // single scaled row per design
            }
        }
    };

    if (table_id == "table1") {
        tau_rows_table("multivalued-null", 3000, all_taus,
                       "rejection rates under a valid instrument, three-level design");
    } else if (table_id == "degenerate-null-table") {
        tau_rows_table("degenerate-null", 3000, all_taus,
                       "rejection rates under a degenerate null");
    } else if (table_id == "unordered-h0") {
        tau_rows_table("unordered-null", 2000, all_taus,
                       "rejection rates under a valid instrument, unordered design");
    } else if (table_id == "binary-h0") {
        tau_rows_table("binary-null", 2000, binary_taus,
                       "rejection rates under a valid instrument, binary design");
    } else if (table_id == "table2") {
        power_table({"dgp1", "dgp2", "dgp3", "dgp4", "dgp5", "dgp6"}, {2.0}, true,
                    "rejection rates against fixed alternatives, three-level design");
    } else if (table_id == "unordered-h1") {
        power_table({"unordered-dgp1", "unordered-dgp2", "unordered-dgp3", "unordered-dgp4",
                     "unordered-dgp5"},
                    {2.0}, true, "rejection rates against fixed alternatives, unordered design");
    } else if (table_id == "binary-h1") {
        power_table({"binary-dgp1", "binary-dgp2", "binary-dgp3", "binary-dgp4"}, {2.0, kInf},
                    false,
                    "rejection rates against fixed alternatives, binary design; the tau=inf "
                    "columns are the conservative full-set baseline");
    } else {
        throw ConfigError("unknown table id '" + table_id + "'");
    }
    table.alpha = 0.05;
    return table;
}

}  // namespace ivtest
