#pragma once

#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "types.hpp"

namespace testutil {

inline ivtest::Dataset make_dataset(const std::vector<std::tuple<double, int, int>>& rows) {
    std::vector<ivtest::Row> encoded;
    for (const auto& [y, d, z] : rows) {
        encoded.push_back({y, std::to_string(d), std::to_string(z), std::nullopt});
    }
    return ivtest::encode_dataset(encoded);
}

inline ivtest::Dataset make_dataset_x(
    const std::vector<std::tuple<double, int, int, int>>& rows) {
    std::vector<ivtest::Row> encoded;
    for (const auto& [y, d, z, x] : rows) {
        encoded.push_back({y, std::to_string(d), std::to_string(z), std::to_string(x)});
    }
    return ivtest::encode_dataset(encoded);
}

struct RandomSpec {
    int max_n = 12;
    int min_n = 4;
    int z_levels = 2;      // 2 or 3
    int d_levels = 2;      // 2 or 3
    bool integer_y = false;  // draw y from a small integer set to force ties
    bool covariate = false;
};

/// Random dataset with every instrument level (and in ordered-usable data
/// at least two treatment levels) present.
inline ivtest::Dataset random_dataset(std::mt19937_64& gen, const RandomSpec& spec) {
    std::uniform_int_distribution<int> n_dist(spec.min_n, spec.max_n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> int_y(0, 3);

    for (;;) {
        const int n = n_dist(gen);
        std::vector<ivtest::Row> rows;
        std::vector<char> z_seen(static_cast<std::size_t>(spec.z_levels), 0);
        std::vector<char> d_seen(static_cast<std::size_t>(spec.d_levels), 0);
        for (int i = 0; i < n; ++i) {
            const int z = static_cast<int>(u(gen) * spec.z_levels) % spec.z_levels;
            const int d = static_cast<int>(u(gen) * spec.d_levels) % spec.d_levels;
            z_seen[static_cast<std::size_t>(z)] = 1;
            d_seen[static_cast<std::size_t>(d)] = 1;
            ivtest::Row row;
            row.y = spec.integer_y ? static_cast<double>(int_y(gen)) : normal(gen);
            row.d = std::to_string(d);
            row.z = std::to_string(z);
            if (spec.covariate) row.x = std::to_string(static_cast<int>(u(gen) * 2) % 2);
            rows.push_back(std::move(row));
        }
        bool ok = true;
        for (char s : z_seen) ok = ok && s;
        int d_count = 0;
        for (char s : d_seen) d_count += s;
        if (!ok || d_count < 2) continue;
        return ivtest::encode_dataset(rows);
    }
}

inline ivtest::TestConfig base_config() {
    ivtest::TestConfig config;
    config.tau_n = 2.0;
    config.xi0 = 0.001;
    config.n_bootstrap = 40;
    config.alpha = 0.05;
    config.seed = 12345;
    config.nu = ivtest::NuMeasure::custom({0.07, 1.0}, {0.5, 0.5});
    return config;
}

}  // namespace testutil
