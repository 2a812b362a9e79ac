#include <doctest.h>

#include <cmath>

#include "bootstrap.hpp"
#include "simulation.hpp"
#include "util.hpp"

using namespace ivtest;

TEST_CASE("catalog lookup") {
    CHECK(find_dgp("multivalued-null") != nullptr);
    CHECK(find_dgp("dgp5") != nullptr);
    CHECK(find_dgp("binary-dgp2") != nullptr);
    CHECK(find_dgp("unordered-null") != nullptr);
    CHECK(find_dgp("no-such-design") == nullptr);
    CHECK(dgp_names().size() == dgp_catalog().size());
}

TEST_CASE("generated samples match the design frequencies") {
    SUBCASE("three-level null design") {
        Rng rng(2024);
        const auto* dgp = find_dgp("multivalued-null");
        const std::int64_t n = 20000;
        const Dataset data = generate(*dgp, n, -1.0, rng);
        double z2 = 0, d2 = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (data.z_labels[static_cast<std::size_t>(data.z[ui])] == "2") z2 += 1;
            if (data.d_labels[static_cast<std::size_t>(data.d[ui])] == "2") d2 += 1;
        }
        const double se_z = 3.0 * std::sqrt(0.25 / n);
        CHECK(std::abs(z2 / n - 0.5) < se_z);
        const double se_d = 3.0 * std::sqrt(0.33 * 0.67 / n);
        CHECK(std::abs(d2 / n - 0.33) < se_d);
    }
    SUBCASE("monotonicity-violating design: conditional treatment shares") {
        Rng rng(77);
        const auto* dgp = find_dgp("dgp5");
        const std::int64_t n = 20000;
        const Dataset data = generate(*dgp, n, -1.0, rng);
        double n0 = 0, d2_given_z0 = 0, n1 = 0, d2_given_z1 = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto& z = data.z_labels[static_cast<std::size_t>(data.z[ui])];
            const bool d2 = data.d_labels[static_cast<std::size_t>(data.d[ui])] == "2";
            if (z == "0") {
                n0 += 1;
                d2_given_z0 += d2;
            } else if (z == "1") {
                n1 += 1;
                d2_given_z1 += d2;
            }
        }
        CHECK(std::abs(d2_given_z0 / n0 - 0.6) < 3.0 * std::sqrt(0.24 / n0));
        CHECK(std::abs(d2_given_z1 / n1 - 0.33) < 3.0 * std::sqrt(0.23 / n1));
    }
    SUBCASE("n = 1 yields a single valid row") {
        Rng rng(1);
        const Dataset data = generate(*find_dgp("multivalued-null"), 1, -1.0, rng);
        CHECK(data.n() == 1);
        CHECK(std::isfinite(data.y[0]));
    }
    SUBCASE("n = 0 errors") {
        Rng rng(1);
        CHECK_THROWS_AS(generate(*find_dgp("multivalued-null"), 0, -1.0, rng), DataError);
    }
    SUBCASE("every catalog entry generates a valid testing sample") {
        for (const auto& dgp : dgp_catalog()) {
            Rng rng(5);
            const Dataset data = generate(dgp, 400, -1.0, rng);
            CHECK(data.n() == 400);
            CHECK(data.z_levels() >= 2);
            CHECK(data.d_levels() >= 2);
            if (dgp.has_x) CHECK(data.has_covariates());
            for (double y : data.y) CHECK(std::isfinite(y));
        }
    }
}

TEST_CASE("warp-speed mechanics") {
    SUBCASE("one bootstrap draw per iteration") {
        TestConfig config = testutil::base_config();
        config.nu = NuMeasure::dirac(0.22);
        config.seed = 9;
        config.threads = 2;
        const WarpSingle w = warp_speed_mc(*find_dgp("binary-null"), config, 25, 120);
        CHECK(w.n_mc == 25);
        CHECK(w.bootstrap_draws == 25);
    }
    SUBCASE("constant outcome never rejects") {
        // Saturated contrasts leave an empty contact set: TS^B = 0, and the
        // realized statistic is never above the pooled critical value.
        TestConfig config = testutil::base_config();
        config.nu = NuMeasure::dirac(0.22);
        const WarpSingle w = warp_speed_mc(*find_dgp("constant-null"), config, 30, 60);
        CHECK(w.rate == 0.0);
    }
    SUBCASE("deterministic across thread counts") {
        TestConfig config = testutil::base_config();
        config.nu = NuMeasure::dirac(0.22);
        config.seed = 31;
        config.threads = 1;
        const WarpSingle serial = warp_speed_mc(*find_dgp("dgp5"), config, 20, 150);
        config.threads = 4;
        const WarpSingle parallel = warp_speed_mc(*find_dgp("dgp5"), config, 20, 150);
        CHECK(serial.rate == parallel.rate);
        CHECK(serial.pooled_critical == parallel.pooled_critical);
    }
    SUBCASE("alternatives reject more as n grows") {
        TestConfig config = testutil::base_config();
        config.nu = NuMeasure::dirac(0.22);
        config.seed = 17;
        config.threads = 4;
        double prev = -1.0;
        for (std::int64_t n : {200, 1000, 2000}) {
            const WarpSingle w = warp_speed_mc(*find_dgp("dgp5"), config, 60, n, 0.5);
            const double band = 3.0 * std::sqrt(0.25 / 60.0);
            CHECK(w.rate >= prev - band);
            prev = w.rate;
        }
        CHECK(prev >= 0.9);  // essentially sure rejection at n = 2000
    }
}

TEST_CASE("table reproduction") {
    SUBCASE("unknown table errors") {
        CHECK_THROWS_AS(reproduce_table("tableX", 10, 0, 1, 1), ConfigError);
    }
    SUBCASE("zero iterations error") {
        CHECK_THROWS_AS(reproduce_table("table1", 0, 0, 1, 1), ConfigError);
    }
    SUBCASE("binary size table has the right shape") {
        const TableResult t = reproduce_table("binary-h0", 12, 300, 3, 2);
        CHECK(t.row_labels.size() == 5);  // tau = 1, 2, 3, 4, inf
        CHECK(t.col_labels.size() == 5);  // 4 xi points + nu_bar
        REQUIRE(t.cells.size() == 5);
        for (const auto& row : t.cells) {
            REQUIRE(row.size() == 5);
            for (const auto& cell : row) {
                CHECK(cell.rate >= 0.0);
                CHECK(cell.rate <= 1.0);
                CHECK(cell.n_mc == 12);
            }
        }
        // smaller tau can only increase the rejection rate
        for (std::size_t c = 0; c < t.col_labels.size(); ++c) {
            for (std::size_t r = 0; r + 1 < t.row_labels.size(); ++r) {
                CHECK(t.cells[r][c].rate >= t.cells[r + 1][c].rate);
            }
        }
    }
    SUBCASE("power comparison table carries both tau blocks") {
        const TableResult t = reproduce_table("binary-h1", 8, 200, 3, 2);
        CHECK(t.col_labels.size() == 8);  // 4 xi for tau=2, 4 for tau=inf
        CHECK(t.row_labels.size() == 4);  // one scaled row per design
    }
}
