#include "bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "threading.hpp"

namespace ivtest {

using detail::phi_from_counts;
using detail::sigma2_from_counts;

std::vector<std::int32_t> resample_weights(std::int64_t n, Rng& rng) {
    std::vector<std::int32_t> weights(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < n; ++i) {
        weights[static_cast<std::size_t>(rng.index_below(n))]++;
    }
    return weights;
}

void bootstrap_per_xi_sup(const StatisticCache& cache,
                          const std::vector<const std::uint8_t*>& masks,
                          const std::vector<std::int32_t>& weights, BootstrapScratch& scratch,
                          std::vector<std::vector<double>>& sup_out) {
    const IntervalIndex& idx = cache.index;
    const int n_cells = idx.n_cells;
    const int n_d = idx.n_d;

    scratch.w_cell.assign(static_cast<std::size_t>(n_cells), 0);
    scratch.w_cell_d.assign(static_cast<std::size_t>(n_cells) * n_d, 0);
    for (std::int64_t i = 0; i < cache.n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const std::int32_t w = weights[ui];
        if (w == 0) continue;
        const int cell = idx.obs_cell[ui];
        scratch.w_cell[static_cast<std::size_t>(cell)] += w;
        scratch.w_cell_d[static_cast<std::size_t>(cell) * n_d + cache.obs_d[ui]] += w;
    }

    double lambda_b = 1.0;
    for (int cell : cache.family.lambda_cells) {
        lambda_b *= static_cast<double>(scratch.w_cell[static_cast<std::size_t>(cell)]) /
                    static_cast<double>(cache.n);
    }
    const double t_n_b = lambda_b * static_cast<double>(cache.n);
    const double sqrt_t_n_b = std::sqrt(t_n_b);

    std::vector<SupAccumulator> acc;
    acc.reserve(masks.size());
    for (std::size_t k = 0; k < masks.size(); ++k) acc.emplace_back(cache.xi);

    for (const FamilyTable& tb : cache.tables) {
        const int r = tb.r();
        const PairSpec& pr = cache.family.pairs[static_cast<std::size_t>(tb.pair)];
        const std::int64_t wn1 = scratch.w_cell[static_cast<std::size_t>(pr.g1_cell)];
        const std::int64_t wn2 = scratch.w_cell[static_cast<std::size_t>(pr.g2_cell)];

        scratch.wa1.assign(static_cast<std::size_t>(r) + 1, 0);
        scratch.wa2.assign(static_cast<std::size_t>(r) + 1, 0);
        for (int p = 0; p < r; ++p) {
            std::int64_t s1 = 0, s2 = 0;
            for (std::int32_t o = tb.obs_start[static_cast<std::size_t>(p)];
                 o < tb.obs_start[static_cast<std::size_t>(p) + 1]; ++o) {
                const auto w = static_cast<std::int64_t>(
                    weights[static_cast<std::size_t>(tb.obs_index[static_cast<std::size_t>(o)])]);
                if (tb.obs_side[static_cast<std::size_t>(o)] == 1) {
                    s1 += w;
                } else {
                    s2 += w;
                }
            }
            scratch.wa1[static_cast<std::size_t>(p) + 1] = scratch.wa1[static_cast<std::size_t>(p)] + s1;
            scratch.wa2[static_cast<std::size_t>(p) + 1] = scratch.wa2[static_cast<std::size_t>(p)] + s2;
        }

        std::uint64_t id = tb.class_offset;
        for (int p = 0; p < r; ++p) {
            const std::int64_t a1p = tb.a1[static_cast<std::size_t>(p)];
            const std::int64_t a2p = tb.a2[static_cast<std::size_t>(p)];
            const std::int64_t wa1p = scratch.wa1[static_cast<std::size_t>(p)];
            const std::int64_t wa2p = scratch.wa2[static_cast<std::size_t>(p)];
            for (int q = p; q < r; ++q, ++id) {
                bool wanted = false;
                for (const auto* mask : masks) {
                    if (mask[id]) {
                        wanted = true;
                        break;
                    }
                }
                if (!wanted) continue;
                const std::int64_t wc1 = scratch.wa1[static_cast<std::size_t>(q) + 1] - wa1p;
                const std::int64_t wc2 = scratch.wa2[static_cast<std::size_t>(q) + 1] - wa2p;
                const double phi_b = phi_from_counts(tb.sign, wc1, wn1, wc2, wn2);
                const double sigma2_b = sigma2_from_counts(t_n_b, wc1, wn1, wc2, wn2);
                const double phi_orig =
                    cache.stored
                        ? cache.phi[id]
                        : phi_from_counts(tb.sign, tb.a1[static_cast<std::size_t>(q) + 1] - a1p,
                                          tb.n1, tb.a2[static_cast<std::size_t>(q) + 1] - a2p,
                                          tb.n2);
                for (std::size_t k = 0; k < masks.size(); ++k) {
                    if (masks[k][id]) acc[k].add(phi_b - phi_orig, sigma2_b, id);
                }
            }
        }
        if (tb.has_empty) {
            for (std::size_t k = 0; k < masks.size(); ++k) {
                if (masks[k][id]) acc[k].add(0.0, 0.0, id);
            }
        }
    }

    for (const FosdMember& fm : cache.fosd) {
        bool wanted = false;
        for (const auto* mask : masks) {
            if (mask[fm.class_id]) {
                wanted = true;
                break;
            }
        }
        if (!wanted) continue;
        const PairSpec& pr = cache.family.pairs[static_cast<std::size_t>(fm.pair)];
        const std::int64_t wn1 = scratch.w_cell[static_cast<std::size_t>(pr.g1_cell)];
        const std::int64_t wn2 = scratch.w_cell[static_cast<std::size_t>(pr.g2_cell)];
        std::int64_t wc1 = 0, wc2 = 0;
        for (int d = 0; d <= fm.c_code; ++d) {
            wc1 += scratch.w_cell_d[static_cast<std::size_t>(pr.g1_cell) * cache.index.n_d + d];
            wc2 += scratch.w_cell_d[static_cast<std::size_t>(pr.g2_cell) * cache.index.n_d + d];
        }
        const double phi_b = phi_from_counts(+1, wc1, wn1, wc2, wn2);
        const double sigma2_b = sigma2_from_counts(t_n_b, wc1, wn1, wc2, wn2);
        for (std::size_t k = 0; k < masks.size(); ++k) {
            if (masks[k][fm.class_id]) acc[k].add(phi_b - fm.phi, sigma2_b, fm.class_id);
        }
    }

    sup_out.resize(masks.size());
    for (std::size_t k = 0; k < masks.size(); ++k) {
        acc[k].finalize(sqrt_t_n_b, sup_out[k], nullptr);
    }
}

namespace {

// Slot of each nu point on the cache grid; every point must be present.
std::vector<std::size_t> nu_slots(const StatisticCache& cache, const NuMeasure& nu) {
    std::vector<std::size_t> slots(nu.points.size());
    for (std::size_t i = 0; i < nu.points.size(); ++i) {
        const auto it = std::lower_bound(cache.xi.begin(), cache.xi.end(), nu.points[i]);
        if (it == cache.xi.end() || *it != nu.points[i]) {
            throw ConfigError("nu point not on the evaluation grid");
        }
        slots[i] = static_cast<std::size_t>(it - cache.xi.begin());
    }
    return slots;
}

double nu_dot(const NuMeasure& nu, const std::vector<std::size_t>& slots,
              const std::vector<double>& sup) {
    double ts = 0.0;
    for (std::size_t i = 0; i < nu.points.size(); ++i) ts += nu.weights[i] * sup[slots[i]];
    return ts;
}

}  // namespace

double bootstrap_statistic(const StatisticCache& cache, const std::vector<std::uint8_t>& mask,
                           const std::vector<std::int32_t>& weights, const NuMeasure& nu) {
    BootstrapScratch scratch;
    std::vector<std::vector<double>> sup;
    bootstrap_per_xi_sup(cache, {mask.data()}, weights, scratch, sup);
    return nu_dot(nu, nu_slots(cache, nu), sup[0]);
}

double critical_value(std::vector<double> stats, double alpha, double eta) {
    if (stats.empty()) throw ConfigError("no bootstrap statistics");
    std::sort(stats.begin(), stats.end());
    const auto n = static_cast<double>(stats.size());
    auto k = static_cast<std::int64_t>(std::ceil((1.0 - alpha) * n));
    if (k < 1) k = 1;
    if (k > static_cast<std::int64_t>(stats.size())) k = static_cast<std::int64_t>(stats.size());
    return std::max(stats[static_cast<std::size_t>(k - 1)], eta);
}

NuMeasure resolve_nu(const Dataset& data, const PairFamily& family, const TestConfig& config) {
    if (!config.nu.empty()) return config.nu;
    if (mode_has_covariates(config.mode)) {
        const double bound = empirical_sigma_bound(data, family);
        if (bound > 0.0) return NuMeasure::bound_grid(bound);
    }
    return NuMeasure::standard_grid();
}

TestResult run_test(const Dataset& input, const TestConfig& config) {
    config.validate();
    const Dataset data = config.instrument_order.empty()
                             ? input
                             : apply_instrument_order(input, config.instrument_order);
    const PairFamily family = build_space(data, config);
    const NuMeasure nu = resolve_nu(data, family, config);

    StatisticCache cache = build_cache(data, family, nu.points, config.cache_limit);

    TestResult result;
    result.xi = nu.points;
    result.nu_weights = nu.weights;
    result.lambda_hat = cache.lambda_hat;
    result.t_n = cache.t_n;
    result.per_xi_sup = cache.per_xi_sup;
    result.per_xi_argmax.reserve(cache.per_xi_arg.size());
    for (std::uint64_t id : cache.per_xi_arg) {
        result.per_xi_argmax.push_back(describe_class(cache, id));
    }
    result.ts = test_statistic(cache, nu);

    const auto mask = estimate_contact_set(cache, config.tau_n, config.xi0);
    result.contact_set_size = contact_raw_size(cache, mask);

    const auto slots = nu_slots(cache, nu);
    result.bootstrap_stats.resize(static_cast<std::size_t>(config.n_bootstrap));
    parallel_for(config.n_bootstrap, config.threads, [&](std::int64_t b) {
        thread_local BootstrapScratch scratch;
        thread_local std::vector<std::vector<double>> sup;
        Rng rng = Rng::substream(config.seed, Rng::kBootstrap, static_cast<std::uint64_t>(b));
        const auto weights = resample_weights(cache.n, rng);
        bootstrap_per_xi_sup(cache, {mask.data()}, weights, scratch, sup);
        result.bootstrap_stats[static_cast<std::size_t>(b)] = nu_dot(nu, slots, sup[0]);
    });

    result.critical_value = critical_value(result.bootstrap_stats, config.alpha, config.eta);
    std::int64_t ge = 0;
    for (double s : result.bootstrap_stats) {
        if (s >= result.ts) ++ge;
    }
    result.p_value = static_cast<double>(ge) / static_cast<double>(config.n_bootstrap);
    result.reject = result.ts > result.critical_value;

    result.sigma_bound = empirical_sigma_bound(data, family);
    result.xi_covers_bound = nu.covers_bound(result.sigma_bound);
    if (cache.lambda_hat == 0.0) {
        result.warnings.push_back(
            "an instrument cell is empty: lambda-hat is 0 and the statistic degenerates to 0");
    }
    if (!result.xi_covers_bound) {
        result.warnings.push_back(
            "no xi point reaches the empirical sigma bound; the unweighted KS member is not "
            "represented");
    }
    return result;
}

}  // namespace ivtest
