#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace ivtest {

/// One instrument-cell pair (g1, g2). A cell is an instrument code, or
/// z * L + x when conditioning covariates are present.
struct PairSpec {
    int g1_cell = 0;
    int g2_cell = 0;
};

/// Signed treatment member of the interval family: h = sign * 1{Y in B, D = d}.
struct DMember {
    int d_code = 0;
    int sign = 1;
};

/// Finite index realization of the function families H x G for one mode.
struct PairFamily {
    Mode mode = Mode::Ordered;
    int n_z = 0;
    int n_x = 1;  // covariate levels; 1 when absent

    std::vector<PairSpec> pairs;
    std::vector<std::vector<DMember>> allowed_d;  // per pair
    bool include_fosd = false;
    std::vector<int> fosd_thresholds;  // treatment codes, maximum excluded
    std::vector<int> lambda_cells;     // cells whose frequencies multiply into Lambda

    int n_cells() const { return n_z * n_x; }
    int cell_of(std::int32_t z, std::int32_t x) const { return z * n_x + x; }
    std::string cell_label(const Dataset& data, int cell) const;
};

PairFamily build_ordered_space(const Dataset& data, Mode mode = Mode::Ordered);
PairFamily build_unordered_space(const Dataset& data, const std::vector<CTriple>& c_set,
                                 Mode mode = Mode::Unordered);
/// Replicates the base-mode family over every covariate level.
PairFamily build_covariate_space(const Dataset& data, Mode mode,
                                 const std::vector<CTriple>& c_set = {});
PairFamily build_space(const Dataset& data, const TestConfig& config);

/// Prefix-count index over the distinct sorted outcomes: any interval count
/// for a (cell, treatment) in O(1), plus cumulative treatment counts for the
/// CDF-threshold family.
struct IntervalIndex {
    std::vector<double> sorted_y;  // distinct, ascending
    int n_cells = 0;
    int n_d = 0;

    std::vector<std::int32_t> obs_cell;  // per observation
    std::vector<std::int32_t> obs_rank;  // rank of y_i in sorted_y
    std::vector<std::int64_t> cell_counts;
    std::vector<std::int64_t> cell_d_counts;  // [cell * n_d + d]
    // cum[(cell * n_d + d) * (m + 1) + t]: observations with this (cell, d)
    // and y <= sorted_y[t-1]; t = 0 is the empty prefix.
    std::vector<std::int64_t> cum;
    std::vector<int> observed_d_codes;  // distinct, ascending

    int m() const { return static_cast<int>(sorted_y.size()); }

    /// Count of observations with the given cell and treatment whose outcome
    /// lies in [sorted_y[i], sorted_y[j]], 0-based, i <= j.
    std::int64_t count(int cell, int d, int i, int j) const {
        const std::int64_t* base = cum.data() + (static_cast<std::size_t>(cell) * n_d + d) * (m() + 1);
        return base[j + 1] - base[i];
    }

    /// Count of observations in the cell with treatment code <= c.
    std::int64_t count_le(int cell, int c) const {
        std::int64_t t = 0;
        for (int d = 0; d <= c; ++d) t += cell_d_counts[static_cast<std::size_t>(cell) * n_d + d];
        return t;
    }

    std::uint64_t intervals_per_member() const {
        const auto mm = static_cast<std::uint64_t>(m());
        return mm * (mm + 1) / 2;
    }
};

IntervalIndex build_interval_index(const Dataset& data, const PairFamily& family);

}  // namespace ivtest
