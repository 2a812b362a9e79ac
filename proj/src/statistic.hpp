#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "spaces.hpp"
#include "types.hpp"

namespace ivtest {

/// Interval-member family for one (pair, signed treatment). Intervals with
/// identical relevant-observation content share every statistic, so the
/// engine enumerates classes over the breakpoints w_1 < ... < w_r (distinct
/// outcomes carrying an observation with this treatment in either cell of
/// the pair) instead of all m(m+1)/2 raw intervals. Multiplicities map class
/// counts back to raw index counts.
struct FamilyTable {
    int pair = 0;
    int d_code = 0;
    int sign = 1;
    std::int64_t n1 = 0;  // cell counts (denominators), fixed per pair
    std::int64_t n2 = 0;

    std::vector<std::int32_t> w_rank;  // ranks into sorted_y, ascending (size r)
    std::vector<std::int64_t> a1, a2;  // prefix counts per side (size r + 1)
    std::vector<std::int64_t> mult_left, mult_right;  // raw-interval multiplicities
    std::uint64_t empty_mult = 0;  // raw intervals containing no relevant observation
    bool has_empty = false;
    std::int32_t empty_rep_rank = -1;  // representative singleton for reporting

    // Relevant observations grouped by breakpoint (CSR), for weighted passes.
    std::vector<std::int32_t> obs_start;  // size r + 1
    std::vector<std::int32_t> obs_index;
    std::vector<std::int8_t> obs_side;  // 1 or 2

    std::uint64_t class_offset = 0;

    int r() const { return static_cast<int>(w_rank.size()); }
    std::uint64_t n_interval_classes() const {
        const auto rr = static_cast<std::uint64_t>(r());
        return rr * (rr + 1) / 2;
    }
    std::uint64_t n_classes() const { return n_interval_classes() + (has_empty ? 1 : 0); }
    /// Local index of the class (p, q), p <= q, in p-major order.
    std::uint64_t local_index(int p, int q) const {
        const auto rp = static_cast<std::uint64_t>(p);
        return rp * static_cast<std::uint64_t>(r()) - rp * (rp - 1) / 2 +
               static_cast<std::uint64_t>(q - p);
    }
};

/// CDF-threshold member 1{D <= c} for one pair; a single class.
struct FosdMember {
    int pair = 0;
    int c_code = 0;
    std::int64_t cnt1 = 0, cnt2 = 0;
    std::int64_t n1 = 0, n2 = 0;
    double phi = 0.0;
    double sigma2 = 0.0;
    std::uint64_t class_id = 0;
};

struct ClassStat {
    double phi = 0.0;
    double sigma2 = 0.0;
};

/// Tracks per-xi maxima of phi / max(xi, sigma) over a stream of classes in
/// O(1) per class: each class contributes phi/sigma to the slots with
/// xi <= sigma and phi/xi to the rest, so bucketed maxima by the crossover
/// position suffice. Ties prefer the smallest class id, making the argmax
/// independent of visit order.
class SupAccumulator {
public:
    explicit SupAccumulator(const std::vector<double>& xi);

    void add(double phi, double sigma2, std::uint64_t id) {
        ++count_;
        int cut = 0;
        while (cut < m_ && xi2_[static_cast<std::size_t>(cut)] <= sigma2) ++cut;
        if (cut > 0) update(by_sigma_[static_cast<std::size_t>(cut)], phi / std::sqrt(sigma2), id);
        if (cut < m_) update(by_xi_[static_cast<std::size_t>(cut)], phi, id);
    }

    bool saw_any() const { return count_ > 0; }

    /// Scaled per-xi suprema; empty streams yield zeros. `arg` may be null.
    void finalize(double scale, std::vector<double>& sup, std::vector<std::uint64_t>* arg) const;

private:
    struct Entry {
        double value;
        std::uint64_t id;
    };
    static void update(Entry& e, double v, std::uint64_t id) {
        if (v > e.value || (v == e.value && id < e.id)) e = {v, id};
    }

    int m_ = 0;
    std::vector<double> xi_;
    std::vector<double> xi2_;
    std::vector<Entry> by_sigma_;  // indexed by cut, 1..m
    std::vector<Entry> by_xi_;     // indexed by cut, 0..m-1
    std::uint64_t count_ = 0;
};

/// Precomputed statistics over the full finite index set.
struct StatisticCache {
    PairFamily family;
    IntervalIndex index;
    std::vector<std::int32_t> obs_d;  // treatment code per observation
    std::int64_t n = 0;

    double lambda_hat = 0.0;
    double t_n = 0.0;       // n * lambda_hat; also the sigma^2 scale factor
    double sqrt_t_n = 0.0;

    std::vector<FamilyTable> tables;
    std::vector<FosdMember> fosd;
    std::uint64_t total_classes = 0;

    bool stored = false;  // phi/sigma2 materialized per class
    std::vector<double> phi;
    std::vector<double> sigma2;

    std::vector<double> xi;  // evaluation grid, ascending
    std::vector<double> per_xi_sup;
    std::vector<std::uint64_t> per_xi_arg;
};

std::pair<double, double> compute_lambda_t(const Dataset& data, const PairFamily& family);
double empirical_sigma_bound(const Dataset& data, const PairFamily& family);

StatisticCache build_cache(const Dataset& data, const PairFamily& family,
                           const std::vector<double>& xi_grid,
                           std::uint64_t cache_limit = 50'000'000);

/// phi-hat and sigma-hat^2 for one class (recomputed from prefix counts).
ClassStat class_stat(const StatisticCache& cache, std::uint64_t class_id);

/// nu-weighted aggregate of the per-xi suprema. Every nu point must be on the
/// cache grid.
double test_statistic(const StatisticCache& cache, const NuMeasure& nu);

/// Contact-set membership per class: sqrt(T_n)|phi| / max(xi0, sigma) <= tau.
std::vector<std::uint8_t> estimate_contact_set(const StatisticCache& cache, double tau,
                                               double xi0);

/// Number of raw (member, pair) indices covered by the masked classes.
std::uint64_t contact_raw_size(const StatisticCache& cache, const std::vector<std::uint8_t>& mask);

/// Class id of the raw interval [sorted_y[i], sorted_y[j]] in one table.
std::uint64_t class_id_for_interval(const StatisticCache& cache, std::size_t table_idx, int i,
                                    int j);

SupArgmax describe_class(const StatisticCache& cache, std::uint64_t class_id);

namespace detail {

inline double phi_from_counts(int sign, std::int64_t c1, std::int64_t n1, std::int64_t c2,
                              std::int64_t n2) {
    const double t2 = n2 > 0 ? static_cast<double>(c2) / static_cast<double>(n2) : 0.0;
    const double t1 = n1 > 0 ? static_cast<double>(c1) / static_cast<double>(n1) : 0.0;
    return sign * (t2 - t1);
}

// sigma^2 = T_n * sum_l p_l (1 - p_l) / n_l with p_l the within-cell share;
// empty cells contribute zero (the 0 * inf convention).
inline double sigma2_from_counts(double t_n, std::int64_t c1, std::int64_t n1, std::int64_t c2,
                                 std::int64_t n2) {
    double s = 0.0;
    if (n1 > 0) {
        const double p = static_cast<double>(c1) / static_cast<double>(n1);
        s += p * (1.0 - p) / static_cast<double>(n1);
    }
    if (n2 > 0) {
        const double p = static_cast<double>(c2) / static_cast<double>(n2);
        s += p * (1.0 - p) / static_cast<double>(n2);
    }
    return t_n * s;
}

inline bool in_contact(double t_n, double phi, double sigma2, double xi0, double tau) {
    if (std::isinf(tau)) return true;
    const double den = std::max(xi0, std::sqrt(std::max(sigma2, 0.0)));
    return std::sqrt(t_n) * std::abs(phi) <= tau * den;
}

}  // namespace detail

}  // namespace ivtest
