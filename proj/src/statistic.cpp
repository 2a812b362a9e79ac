#include "statistic.hpp"

#include <algorithm>
#include <cmath>

namespace ivtest {

using detail::in_contact;
using detail::phi_from_counts;
using detail::sigma2_from_counts;

SupAccumulator::SupAccumulator(const std::vector<double>& xi)
    : m_(static_cast<int>(xi.size())), xi_(xi) {
    xi2_.resize(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) xi2_[i] = xi[i] * xi[i];
    const Entry none{-kInf, std::numeric_limits<std::uint64_t>::max()};
    by_sigma_.assign(xi.size() + 1, none);
    by_xi_.assign(xi.size() + 1, none);
}

void SupAccumulator::finalize(double scale, std::vector<double>& sup,
                              std::vector<std::uint64_t>* arg) const {
    sup.assign(static_cast<std::size_t>(m_), 0.0);
    if (arg) arg->assign(static_cast<std::size_t>(m_), std::numeric_limits<std::uint64_t>::max());
    if (count_ == 0) return;

    // Suffix maxima over by_sigma (classes whose denominator is sigma at
    // slot s have cut > s) and prefix maxima over by_xi.
    std::vector<Entry> sigma_suffix(static_cast<std::size_t>(m_) + 2,
                                    {-kInf, std::numeric_limits<std::uint64_t>::max()});
    for (int c = m_; c >= 1; --c) {
        Entry e = sigma_suffix[static_cast<std::size_t>(c) + 1];
        const Entry& b = by_sigma_[static_cast<std::size_t>(c)];
        if (b.value > e.value || (b.value == e.value && b.id < e.id)) e = b;
        sigma_suffix[static_cast<std::size_t>(c)] = e;
    }
    Entry xi_prefix{-kInf, std::numeric_limits<std::uint64_t>::max()};
    for (int s = 0; s < m_; ++s) {
        const Entry& b = by_xi_[static_cast<std::size_t>(s)];
        if (b.value > xi_prefix.value || (b.value == xi_prefix.value && b.id < xi_prefix.id)) {
            xi_prefix = b;
        }
        const Entry& sig = sigma_suffix[static_cast<std::size_t>(s) + 1];
        double best_v = sig.value;
        std::uint64_t best_id = sig.id;
        if (xi_prefix.id != std::numeric_limits<std::uint64_t>::max()) {
            const double v = xi_prefix.value / xi_[static_cast<std::size_t>(s)];
            if (v > best_v || (v == best_v && xi_prefix.id < best_id)) {
                best_v = v;
                best_id = xi_prefix.id;
            }
        }
        sup[static_cast<std::size_t>(s)] = scale * best_v + 0.0;  // normalize -0
        if (arg) (*arg)[static_cast<std::size_t>(s)] = best_id;
    }
}

namespace {

std::vector<std::int64_t> tally_cells(const Dataset& data, const PairFamily& family) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(family.n_cells()), 0);
    const bool cov = data.has_covariates() && family.n_x > 1;
    for (std::int64_t i = 0; i < data.n(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int cell = family.cell_of(data.z[ui], cov ? data.x[ui] : 0);
        counts[static_cast<std::size_t>(cell)]++;
    }
    return counts;
}

double lambda_from_counts(const std::vector<std::int64_t>& counts, const PairFamily& family,
                          std::int64_t n) {
    double lambda = 1.0;
    for (int cell : family.lambda_cells) {
        lambda *= static_cast<double>(counts[static_cast<std::size_t>(cell)]) /
                  static_cast<double>(n);
    }
    return lambda;
}

}  // namespace

std::pair<double, double> compute_lambda_t(const Dataset& data, const PairFamily& family) {
    const auto counts = tally_cells(data, family);
    const double lambda = lambda_from_counts(counts, family, data.n());
    return {lambda, lambda * static_cast<double>(data.n())};
}

double empirical_sigma_bound(const Dataset& data, const PairFamily& family) {
    const auto counts = tally_cells(data, family);
    const double lambda = lambda_from_counts(counts, family, data.n());
    const auto n = static_cast<double>(data.n());
    double worst = 0.0;
    for (const PairSpec& pr : family.pairs) {
        const auto c1 = counts[static_cast<std::size_t>(pr.g1_cell)];
        const auto c2 = counts[static_cast<std::size_t>(pr.g2_cell)];
        double term = 0.0;
        if (c1 > 0) term += lambda * n / static_cast<double>(c1);
        if (c2 > 0) term += lambda * n / static_cast<double>(c2);
        worst = std::max(worst, term);
    }
    return std::sqrt(0.25 * worst);
}

namespace {

// Visits every class in id order within each table; fn(id, phi, sigma2).
template <typename Fn>
void visit_table(const FamilyTable& tb, double t_n, Fn&& fn) {
    const int r = tb.r();
    std::uint64_t id = tb.class_offset;
    for (int p = 0; p < r; ++p) {
        const std::int64_t a1p = tb.a1[static_cast<std::size_t>(p)];
        const std::int64_t a2p = tb.a2[static_cast<std::size_t>(p)];
        for (int q = p; q < r; ++q) {
            const std::int64_t c1 = tb.a1[static_cast<std::size_t>(q) + 1] - a1p;
            const std::int64_t c2 = tb.a2[static_cast<std::size_t>(q) + 1] - a2p;
            fn(id++, phi_from_counts(tb.sign, c1, tb.n1, c2, tb.n2),
               sigma2_from_counts(t_n, c1, tb.n1, c2, tb.n2));
        }
    }
    if (tb.has_empty) fn(id, 0.0, 0.0);
}

template <typename Fn>
void visit_all(const StatisticCache& cache, Fn&& fn) {
    for (const FamilyTable& tb : cache.tables) visit_table(tb, cache.t_n, fn);
    for (const FosdMember& fm : cache.fosd) fn(fm.class_id, fm.phi, fm.sigma2);
}

}  // namespace

StatisticCache build_cache(const Dataset& data, const PairFamily& family,
                           const std::vector<double>& xi_grid, std::uint64_t cache_limit) {
    StatisticCache cache;
    cache.family = family;
    cache.index = build_interval_index(data, family);
    cache.obs_d = data.d;
    cache.n = data.n();
    cache.xi = xi_grid;

    const auto [lambda, t_n] = compute_lambda_t(data, family);
    cache.lambda_hat = lambda;
    cache.t_n = t_n;
    cache.sqrt_t_n = std::sqrt(t_n);

    const IntervalIndex& idx = cache.index;
    const int m = idx.m();

    // Pass 1: build breakpoint tables and thresholds, assign class ids
    // pair-major with interval members before thresholds.
    std::vector<std::int32_t> rank2pos(static_cast<std::size_t>(m));
    std::uint64_t next_id = 0;
    for (std::size_t pi = 0; pi < family.pairs.size(); ++pi) {
        const PairSpec& pr = family.pairs[pi];
        for (const DMember& dm : family.allowed_d[pi]) {
            FamilyTable tb;
            tb.pair = static_cast<int>(pi);
            tb.d_code = dm.d_code;
            tb.sign = dm.sign;
            tb.n1 = idx.cell_counts[static_cast<std::size_t>(pr.g1_cell)];
            tb.n2 = idx.cell_counts[static_cast<std::size_t>(pr.g2_cell)];

            const std::int64_t* base1 =
                idx.cum.data() +
                (static_cast<std::size_t>(pr.g1_cell) * idx.n_d + dm.d_code) * (m + 1);
            const std::int64_t* base2 =
                idx.cum.data() +
                (static_cast<std::size_t>(pr.g2_cell) * idx.n_d + dm.d_code) * (m + 1);

            for (int t = 0; t < m; ++t) {
                if (base1[t + 1] > base1[t] || base2[t + 1] > base2[t]) {
                    tb.w_rank.push_back(t);
                }
            }
            const int r = tb.r();
            tb.a1.resize(static_cast<std::size_t>(r) + 1);
            tb.a2.resize(static_cast<std::size_t>(r) + 1);
            tb.a1[0] = tb.a2[0] = 0;
            for (int p = 0; p < r; ++p) {
                const int t = tb.w_rank[static_cast<std::size_t>(p)];
                tb.a1[static_cast<std::size_t>(p) + 1] = base1[t + 1];
                tb.a2[static_cast<std::size_t>(p) + 1] = base2[t + 1];
            }

            // Raw-interval multiplicities and the empty-class bookkeeping.
            tb.mult_left.resize(static_cast<std::size_t>(r));
            tb.mult_right.resize(static_cast<std::size_t>(r));
            std::int64_t gap_total = 0;
            auto add_gap = [&](std::int64_t g) {
                if (g > 0) {
                    gap_total += 1;  // at least one singleton exists
                    tb.empty_mult += static_cast<std::uint64_t>(g) *
                                     static_cast<std::uint64_t>(g + 1) / 2;
                }
            };
            if (r == 0) {
                add_gap(m);
                tb.empty_rep_rank = m > 0 ? 0 : -1;
            } else {
                for (int p = 0; p < r; ++p) {
                    const int prev = p > 0 ? tb.w_rank[static_cast<std::size_t>(p) - 1] : -1;
                    tb.mult_left[static_cast<std::size_t>(p)] =
                        tb.w_rank[static_cast<std::size_t>(p)] - prev;
                    const int next = p + 1 < r ? tb.w_rank[static_cast<std::size_t>(p) + 1] : m;
                    tb.mult_right[static_cast<std::size_t>(p)] =
                        next - tb.w_rank[static_cast<std::size_t>(p)];
                }
                add_gap(tb.w_rank[0]);
                for (int p = 0; p + 1 < r; ++p) {
                    add_gap(tb.w_rank[static_cast<std::size_t>(p) + 1] -
                            tb.w_rank[static_cast<std::size_t>(p)] - 1);
                }
                add_gap(m - 1 - tb.w_rank[static_cast<std::size_t>(r) - 1]);
                if (tb.empty_mult > 0) {
                    if (tb.w_rank[0] > 0) {
                        tb.empty_rep_rank = 0;
                    } else {
                        for (int p = 0; p + 1 < r && tb.empty_rep_rank < 0; ++p) {
                            if (tb.w_rank[static_cast<std::size_t>(p) + 1] >
                                tb.w_rank[static_cast<std::size_t>(p)] + 1) {
                                tb.empty_rep_rank = tb.w_rank[static_cast<std::size_t>(p)] + 1;
                            }
                        }
                        if (tb.empty_rep_rank < 0) {
                            tb.empty_rep_rank = tb.w_rank[static_cast<std::size_t>(r) - 1] + 1;
                        }
                    }
                }
            }
            tb.has_empty = tb.empty_mult > 0;
            (void)gap_total;

            // Relevant observations grouped by breakpoint position.
            std::fill(rank2pos.begin(), rank2pos.end(), -1);
            for (int p = 0; p < r; ++p) rank2pos[static_cast<std::size_t>(tb.w_rank[static_cast<std::size_t>(p)])] = p;
            std::vector<std::int32_t> per_pos(static_cast<std::size_t>(r) + 1, 0);
            for (std::int64_t i = 0; i < cache.n; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                if (cache.obs_d[ui] != dm.d_code) continue;
                const int cell = idx.obs_cell[ui];
                if (cell != pr.g1_cell && cell != pr.g2_cell) continue;
                per_pos[static_cast<std::size_t>(rank2pos[static_cast<std::size_t>(idx.obs_rank[ui])]) + 1]++;
            }
            tb.obs_start.resize(static_cast<std::size_t>(r) + 1);
            tb.obs_start[0] = 0;
            for (int p = 0; p < r; ++p) {
                tb.obs_start[static_cast<std::size_t>(p) + 1] =
                    tb.obs_start[static_cast<std::size_t>(p)] + per_pos[static_cast<std::size_t>(p) + 1];
            }
            tb.obs_index.resize(static_cast<std::size_t>(tb.obs_start[static_cast<std::size_t>(r)]));
            tb.obs_side.resize(tb.obs_index.size());
            std::vector<std::int32_t> cursor(tb.obs_start.begin(), tb.obs_start.end());
            for (std::int64_t i = 0; i < cache.n; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                if (cache.obs_d[ui] != dm.d_code) continue;
                const int cell = idx.obs_cell[ui];
                if (cell != pr.g1_cell && cell != pr.g2_cell) continue;
                const int pos = rank2pos[static_cast<std::size_t>(idx.obs_rank[ui])];
                const auto slot = static_cast<std::size_t>(cursor[static_cast<std::size_t>(pos)]++);
                tb.obs_index[slot] = static_cast<std::int32_t>(i);
                tb.obs_side[slot] = cell == pr.g1_cell ? 1 : 2;
            }

            tb.class_offset = next_id;
            next_id += tb.n_classes();
            cache.tables.push_back(std::move(tb));
        }

        if (family.include_fosd) {
            for (int c : family.fosd_thresholds) {
                FosdMember fm;
                fm.pair = static_cast<int>(pi);
                fm.c_code = c;
                fm.n1 = idx.cell_counts[static_cast<std::size_t>(pr.g1_cell)];
                fm.n2 = idx.cell_counts[static_cast<std::size_t>(pr.g2_cell)];
                fm.cnt1 = idx.count_le(pr.g1_cell, c);
                fm.cnt2 = idx.count_le(pr.g2_cell, c);
                fm.phi = phi_from_counts(+1, fm.cnt1, fm.n1, fm.cnt2, fm.n2);
                fm.sigma2 = sigma2_from_counts(cache.t_n, fm.cnt1, fm.n1, fm.cnt2, fm.n2);
                fm.class_id = next_id++;
                cache.fosd.push_back(fm);
            }
        }
    }
    cache.total_classes = next_id;

    // Pass 2: per-xi suprema over the full set; optionally materialize
    // phi/sigma^2 per class for the bootstrap loop.
    cache.stored = cache.total_classes <= cache_limit;
    if (cache.stored) {
        cache.phi.resize(cache.total_classes);
        cache.sigma2.resize(cache.total_classes);
    }
    SupAccumulator acc(cache.xi);
    visit_all(cache, [&](std::uint64_t id, double phi, double sigma2) {
        if (cache.stored) {
            cache.phi[id] = phi;
            cache.sigma2[id] = sigma2;
        }
        acc.add(phi, sigma2, id);
    });
    acc.finalize(cache.sqrt_t_n, cache.per_xi_sup, &cache.per_xi_arg);
    return cache;
}

ClassStat class_stat(const StatisticCache& cache, std::uint64_t class_id) {
    for (const FosdMember& fm : cache.fosd) {
        if (fm.class_id == class_id) return {fm.phi, fm.sigma2};
    }
    for (const FamilyTable& tb : cache.tables) {
        if (class_id < tb.class_offset || class_id >= tb.class_offset + tb.n_classes()) continue;
        std::uint64_t local = class_id - tb.class_offset;
        if (tb.has_empty && local == tb.n_interval_classes()) return {0.0, 0.0};
        const int r = tb.r();
        int p = 0;
        while (local >= static_cast<std::uint64_t>(r - p)) {
            local -= static_cast<std::uint64_t>(r - p);
            ++p;
        }
        const int q = p + static_cast<int>(local);
        const std::int64_t c1 = tb.a1[static_cast<std::size_t>(q) + 1] - tb.a1[static_cast<std::size_t>(p)];
        const std::int64_t c2 = tb.a2[static_cast<std::size_t>(q) + 1] - tb.a2[static_cast<std::size_t>(p)];
        return {phi_from_counts(tb.sign, c1, tb.n1, c2, tb.n2),
                sigma2_from_counts(cache.t_n, c1, tb.n1, c2, tb.n2)};
    }
    throw std::out_of_range("class id out of range");
}

double test_statistic(const StatisticCache& cache, const NuMeasure& nu) {
    double ts = 0.0;
    for (std::size_t i = 0; i < nu.points.size(); ++i) {
        const auto it = std::lower_bound(cache.xi.begin(), cache.xi.end(), nu.points[i]);
        if (it == cache.xi.end() || *it != nu.points[i]) {
            throw ConfigError("nu point not on the evaluation grid");
        }
        ts += nu.weights[i] * cache.per_xi_sup[static_cast<std::size_t>(it - cache.xi.begin())];
    }
    return ts;
}

std::vector<std::uint8_t> estimate_contact_set(const StatisticCache& cache, double tau,
                                               double xi0) {
    std::vector<std::uint8_t> mask(cache.total_classes, 0);
    if (std::isinf(tau)) {
        std::fill(mask.begin(), mask.end(), 1);
        return mask;
    }
    if (cache.stored) {
        for (std::uint64_t id = 0; id < cache.total_classes; ++id) {
            mask[id] = in_contact(cache.t_n, cache.phi[id], cache.sigma2[id], xi0, tau) ? 1 : 0;
        }
    } else {
        visit_all(cache, [&](std::uint64_t id, double phi, double sigma2) {
            mask[id] = in_contact(cache.t_n, phi, sigma2, xi0, tau) ? 1 : 0;
        });
    }
    return mask;
}

std::uint64_t contact_raw_size(const StatisticCache& cache,
                               const std::vector<std::uint8_t>& mask) {
    std::uint64_t total = 0;
    for (const FamilyTable& tb : cache.tables) {
        const int r = tb.r();
        std::uint64_t id = tb.class_offset;
        for (int p = 0; p < r; ++p) {
            for (int q = p; q < r; ++q, ++id) {
                if (mask[id]) {
                    total += static_cast<std::uint64_t>(tb.mult_left[static_cast<std::size_t>(p)]) *
                             static_cast<std::uint64_t>(tb.mult_right[static_cast<std::size_t>(q)]);
                }
            }
        }
        if (tb.has_empty && mask[id]) total += tb.empty_mult;
    }
    for (const FosdMember& fm : cache.fosd) {
        if (mask[fm.class_id]) ++total;
    }
    return total;
}

std::uint64_t class_id_for_interval(const StatisticCache& cache, std::size_t table_idx, int i,
                                    int j) {
    const FamilyTable& tb = cache.tables.at(table_idx);
    const auto lo = std::lower_bound(tb.w_rank.begin(), tb.w_rank.end(), i);
    const auto hi = std::upper_bound(tb.w_rank.begin(), tb.w_rank.end(), j);
    if (lo == tb.w_rank.end() || hi == tb.w_rank.begin() || lo >= hi) {
        if (!tb.has_empty) throw std::logic_error("empty interval class not realizable");
        return tb.class_offset + tb.n_interval_classes();
    }
    const int p = static_cast<int>(lo - tb.w_rank.begin());
    const int q = static_cast<int>(hi - tb.w_rank.begin()) - 1;
    return tb.class_offset + tb.local_index(p, q);
}

SupArgmax describe_class(const StatisticCache& cache, std::uint64_t class_id) {
    SupArgmax out;
    for (const FosdMember& fm : cache.fosd) {
        if (fm.class_id != class_id) continue;
        out.pair = fm.pair;
        out.is_fosd = true;
        out.d_code = fm.c_code;
        out.sign = 1;
        return out;
    }
    for (const FamilyTable& tb : cache.tables) {
        if (class_id < tb.class_offset || class_id >= tb.class_offset + tb.n_classes()) continue;
        out.pair = tb.pair;
        out.d_code = tb.d_code;
        out.sign = tb.sign;
        std::uint64_t local = class_id - tb.class_offset;
        if (tb.has_empty && local == tb.n_interval_classes()) {
            out.empty_interval = true;
            const double v = cache.index.sorted_y[static_cast<std::size_t>(tb.empty_rep_rank)];
            out.lo = out.hi = v;
            return out;
        }
        const int r = tb.r();
        int p = 0;
        while (local >= static_cast<std::uint64_t>(r - p)) {
            local -= static_cast<std::uint64_t>(r - p);
            ++p;
        }
        const int q = p + static_cast<int>(local);
        out.lo = cache.index.sorted_y[static_cast<std::size_t>(tb.w_rank[static_cast<std::size_t>(p)])];
        out.hi = cache.index.sorted_y[static_cast<std::size_t>(tb.w_rank[static_cast<std::size_t>(q)])];
        return out;
    }
    throw std::out_of_range("class id out of range");
}

}  // namespace ivtest
