#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "types.hpp"

namespace ivtest {

/// Mixture-of-normals component; a single component is a plain normal and
/// sd = 0 makes the outcome constant.
struct MixComp {
    double w = 1.0;
    double mean = 0.0;
    double sd = 1.0;
};
using Dist = std::vector<MixComp>;

/// Potential-treatment map for one instrument value: the latent uniform V is
/// cut into top (V <= cut_hi), middle (cut_hi < V <= cut_mid) and bottom.
struct DzSpec {
    double cut_hi = 0.0;
    double cut_mid = 0.0;
};

/// Declarative Monte Carlo design: every design is a table entry, not a code
/// branch.
struct DgpCatalogEntry {
    std::string name;
    std::string title;
    Mode mode = Mode::Ordered;
    int d_count = 3;               // treatment levels (2 or 3)
    bool unordered_labels = false; // treatment labels a/b/c instead of 0/1/2
    bool has_x = false;            // Bernoulli(1/2) conditioning covariate
    bool z_tri = false;            // Z = 2*1{U<=r} + 1{r<U<=r+0.2}; else Z = 1{U<=r}
    double default_r = 0.5;
    std::vector<DzSpec> d_of_z;    // one entry per instrument value
    bool y_depends_z = false;
    std::vector<std::vector<Dist>> y_dist;  // [d][z], inner size 1 when !y_depends_z
    std::vector<CTriple> c_set;             // unordered designs
    NuMeasure default_grid;
};

const std::vector<DgpCatalogEntry>& dgp_catalog();
const DgpCatalogEntry* find_dgp(const std::string& name);
std::vector<std::string> dgp_names();

/// Draws an i.i.d. sample from the design. r < 0 uses the design default.
Dataset generate(const DgpCatalogEntry& dgp, std::int64_t n, double r, Rng& rng);

/// Warp-speed Monte Carlo: one bootstrap draw per iteration, critical value
/// from the pooled draws.
struct WarpSpec {
    const DgpCatalogEntry* dgp = nullptr;
    std::int64_t n = 1000;
    double r = -1.0;              // < 0: design default
    std::vector<double> taus{2.0};
    NuMeasure grid;               // xi grid; empty uses the design default
    bool per_point_columns = true;  // Dirac column per point plus the weighted column
    double xi0 = 0.001;
    double alpha = 0.05;
    double eta = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;
    int n_mc = 0;
};

struct WarpOutcome {
    std::vector<double> xi;
    bool has_weighted_column = false;
    // [tau][column]; columns = one per xi point (+ the nu-weighted column),
    // or a single weighted column when per_point_columns is off.
    std::vector<std::vector<double>> rate;
    std::vector<std::vector<double>> mc_se;
    std::vector<std::vector<double>> pooled_critical;
    std::uint64_t bootstrap_draws = 0;
    int n_mc = 0;
};

WarpOutcome run_warp(const WarpSpec& spec);

/// Single rejection rate at the config's tau and nu (spec-level wrapper).
struct WarpSingle {
    double rate = 0.0;
    double mc_se = 0.0;
    double pooled_critical = 0.0;
    int n_mc = 0;
    std::uint64_t bootstrap_draws = 0;
};
WarpSingle warp_speed_mc(const DgpCatalogEntry& dgp, const TestConfig& config, int n_mc,
                         std::int64_t n, double r = -1.0);

/// Rejection-rate table mirroring one of the study designs at a requested
/// scale. Each cell carries (rate, Monte Carlo standard error, n_mc).
struct TableCell {
    double rate = 0.0;
    double mc_se = 0.0;
    int n_mc = 0;
};

struct TableResult {
    std::string id;
    std::string title;
    std::int64_t n = 0;  // 0 when rows carry their own n
    std::uint64_t seed = 0;
    double alpha = 0.05;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<TableCell>> cells;
};

TableResult reproduce_table(const std::string& table_id, int mc_iters, std::int64_t n_override,
                            std::uint64_t seed, int threads);
std::vector<std::string> table_ids();

}  // namespace ivtest
