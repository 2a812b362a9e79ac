#include "spaces.hpp"

#include <algorithm>
#include <set>

namespace ivtest {

std::string PairFamily::cell_label(const Dataset& data, int cell) const {
    const int z = cell / n_x;
    const int x = cell % n_x;
    std::string s = "z=" + data.z_labels[static_cast<std::size_t>(z)];
    if (n_x > 1) s += ",x=" + data.x_labels[static_cast<std::size_t>(x)];
    return s;
}

namespace {

std::vector<int> observed_codes(const std::vector<std::int32_t>& col, int levels) {
    std::vector<char> seen(static_cast<std::size_t>(levels), 0);
    for (auto c : col) seen[static_cast<std::size_t>(c)] = 1;
    std::vector<int> out;
    for (int c = 0; c < levels; ++c) {
        if (seen[static_cast<std::size_t>(c)]) out.push_back(c);
    }
    return out;
}

void fill_lambda_all_cells(PairFamily& fam) {
    fam.lambda_cells.resize(static_cast<std::size_t>(fam.n_cells()));
    for (int c = 0; c < fam.n_cells(); ++c) fam.lambda_cells[static_cast<std::size_t>(c)] = c;
}

}  // namespace

PairFamily build_ordered_space(const Dataset& data, Mode mode) {
    const int x_levels = mode_has_covariates(mode) ? data.x_levels() : 1;
    if (mode_has_covariates(mode) && !data.has_covariates()) {
        throw ConfigError("covariate mode requires a covariate column");
    }
    if (data.z_levels() < 2) throw DataError("single instrument level");
    if (mode == Mode::Binary && (data.z_levels() != 2 || data.d_levels() != 2)) {
        throw ConfigError("binary mode requires exactly 2 treatment and 2 instrument levels");
    }
    auto [d_min, d_max] = normalize_extremes(data);

    PairFamily fam;
    fam.mode = mode;
    fam.n_z = data.z_levels();
    fam.n_x = x_levels;
    fam.include_fosd = true;

    // Thresholds at each distinct observed treatment code except the maximum;
    // the top threshold has identically zero contrast.
    std::vector<int> d_codes = observed_codes(data.d, data.d_levels());
    fam.fosd_thresholds.assign(d_codes.begin(), d_codes.end() - 1);

    const std::vector<DMember> members{{d_min, +1}, {d_max, -1}};
    for (int l = 0; l < x_levels; ++l) {
        for (int k = 0; k + 1 < fam.n_z; ++k) {
            fam.pairs.push_back({fam.cell_of(k, l), fam.cell_of(k + 1, l)});
            fam.allowed_d.push_back(members);
        }
    }
    fill_lambda_all_cells(fam);
    return fam;
}

PairFamily build_unordered_space(const Dataset& data, const std::vector<CTriple>& c_set,
                                 Mode mode) {
    const bool with_cov = mode_has_covariates(mode);
    if (with_cov && !data.has_covariates()) {
        throw ConfigError("covariate mode requires a covariate column");
    }
    if (c_set.empty()) throw ConfigError("empty C-set: nothing to test");
    if (data.z_levels() < 2) throw DataError("single instrument level");

    auto code_of = [](const std::vector<std::string>& labels, const std::string& label,
                      const char* what) {
        auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) {
            throw ConfigError(std::string("C-set references unknown ") + what + " label '" + label +
                              "'");
        }
        return static_cast<int>(it - labels.begin());
    };

    // Resolve labels to codes, deduplicate triples.
    std::set<std::tuple<int, int, int>> triples;
    for (const CTriple& t : c_set) {
        const int d = code_of(data.d_labels, t.d, "treatment");
        const int z = code_of(data.z_labels, t.z, "instrument");
        const int zp = code_of(data.z_labels, t.z_prime, "instrument");
        if (z == zp) throw ConfigError("C-set triple has z == z'");
        triples.insert({d, z, zp});
    }

    PairFamily fam;
    fam.mode = mode;
    fam.n_z = data.z_levels();
    fam.n_x = with_cov ? data.x_levels() : 1;
    fam.include_fosd = false;

    std::set<int> z_in_c;
    for (const auto& [d, z, zp] : triples) {
        z_in_c.insert(z);
        z_in_c.insert(zp);
    }
    for (int l = 0; l < fam.n_x; ++l) {
        for (const auto& [d, z, zp] : triples) {
            // g1 <- z, g2 <- z'; the implication bounds the z' term by the z term.
            fam.pairs.push_back({fam.cell_of(z, l), fam.cell_of(zp, l)});
            fam.allowed_d.push_back({{d, +1}});
        }
    }
    // Lambda multiplies over the instrument levels appearing in the C-set
    // (crossed with every covariate level).
    for (int z : z_in_c) {
        for (int l = 0; l < fam.n_x; ++l) fam.lambda_cells.push_back(fam.cell_of(z, l));
    }
    std::sort(fam.lambda_cells.begin(), fam.lambda_cells.end());
    return fam;
}

PairFamily build_covariate_space(const Dataset& data, Mode mode,
                                 const std::vector<CTriple>& c_set) {
    if (!data.has_covariates()) throw ConfigError("covariate mode requires a covariate column");
    if (mode == Mode::UnorderedCov) return build_unordered_space(data, c_set, mode);
    return build_ordered_space(data, Mode::OrderedCov);
}

PairFamily build_space(const Dataset& data, const TestConfig& config) {
    switch (config.mode) {
        case Mode::Ordered:
        case Mode::Binary:
            return build_ordered_space(data, config.mode);
        case Mode::Unordered:
            return build_unordered_space(data, config.c_set, Mode::Unordered);
        case Mode::OrderedCov:
        case Mode::UnorderedCov:
            return build_covariate_space(data, config.mode, config.c_set);
    }
    throw ConfigError("unknown mode");
}

IntervalIndex build_interval_index(const Dataset& data, const PairFamily& family) {
    IntervalIndex idx;
    idx.n_cells = family.n_cells();
    idx.n_d = data.d_levels();

    idx.sorted_y = data.y;
    std::sort(idx.sorted_y.begin(), idx.sorted_y.end());
    idx.sorted_y.erase(std::unique(idx.sorted_y.begin(), idx.sorted_y.end()), idx.sorted_y.end());
    const int m = idx.m();

    const auto n = data.n();
    idx.obs_cell.resize(static_cast<std::size_t>(n));
    idx.obs_rank.resize(static_cast<std::size_t>(n));
    idx.cell_counts.assign(static_cast<std::size_t>(idx.n_cells), 0);
    idx.cell_d_counts.assign(static_cast<std::size_t>(idx.n_cells) * idx.n_d, 0);
    idx.cum.assign(static_cast<std::size_t>(idx.n_cells) * idx.n_d * (m + 1), 0);

    for (std::int64_t i = 0; i < n; ++i) {
        const int cell = family.cell_of(data.z[static_cast<std::size_t>(i)],
                                        data.has_covariates() ? data.x[static_cast<std::size_t>(i)] : 0);
        const auto it = std::lower_bound(idx.sorted_y.begin(), idx.sorted_y.end(),
                                         data.y[static_cast<std::size_t>(i)]);
        const auto rank = static_cast<std::int32_t>(it - idx.sorted_y.begin());
        idx.obs_cell[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(cell);
        idx.obs_rank[static_cast<std::size_t>(i)] = rank;
        idx.cell_counts[static_cast<std::size_t>(cell)]++;
        const int d = data.d[static_cast<std::size_t>(i)];
        idx.cell_d_counts[static_cast<std::size_t>(cell) * idx.n_d + d]++;
        idx.cum[(static_cast<std::size_t>(cell) * idx.n_d + d) * (m + 1) + rank + 1]++;
    }
    // Jump tallies to cumulative counts.
    for (int cell = 0; cell < idx.n_cells; ++cell) {
        for (int d = 0; d < idx.n_d; ++d) {
            std::int64_t* base = idx.cum.data() + (static_cast<std::size_t>(cell) * idx.n_d + d) * (m + 1);
            for (int t = 1; t <= m; ++t) base[t] += base[t - 1];
        }
    }

    idx.observed_d_codes = [&] {
        std::vector<char> seen(static_cast<std::size_t>(idx.n_d), 0);
        for (auto c : data.d) seen[static_cast<std::size_t>(c)] = 1;
        std::vector<int> out;
        for (int c = 0; c < idx.n_d; ++c) {
            if (seen[static_cast<std::size_t>(c)]) out.push_back(c);
        }
        return out;
    }();
    return idx;
}

}  // namespace ivtest
