#pragma once

#include <cstdint>
#include <vector>

#include "rng.hpp"
#include "statistic.hpp"
#include "types.hpp"

namespace ivtest {

/// Multinomial(n; 1/n, ..., 1/n) weights: n index draws with replacement,
/// tallied.
std::vector<std::int32_t> resample_weights(std::int64_t n, Rng& rng);

/// Reusable per-replication workspace.
struct BootstrapScratch {
    std::vector<std::int64_t> w_cell;
    std::vector<std::int64_t> w_cell_d;
    std::vector<std::int64_t> wa1, wa2;
};

/// Per-xi suprema of the recentered bootstrap statistic over the classes
/// selected by each mask, sharing the weighted counts across masks. The
/// supremum over an empty selection is zero.
void bootstrap_per_xi_sup(const StatisticCache& cache,
                          const std::vector<const std::uint8_t*>& masks,
                          const std::vector<std::int32_t>& weights, BootstrapScratch& scratch,
                          std::vector<std::vector<double>>& sup_out);

/// Bootstrap statistic for one draw and one contact mask.
double bootstrap_statistic(const StatisticCache& cache, const std::vector<std::uint8_t>& mask,
                           const std::vector<std::int32_t>& weights, const NuMeasure& nu);

/// ceil((1 - alpha) * n_B)-th order statistic of the bootstrap stats,
/// floored at eta.
double critical_value(std::vector<double> stats, double alpha, double eta);

/// Default trimming measure for a dataset: the bound-scaled grid when
/// covariates are present, the ten-point standard grid otherwise.
NuMeasure resolve_nu(const Dataset& data, const PairFamily& family, const TestConfig& config);

/// Full test: spaces, statistic, contact set, bootstrap replications,
/// critical value, decision. Deterministic given config.seed, independent of
/// config.threads.
TestResult run_test(const Dataset& data, const TestConfig& config);

}  // namespace ivtest
