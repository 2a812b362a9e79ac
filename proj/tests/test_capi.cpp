#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivtest/ivtest.h"

namespace {

struct TempCsv {
    std::string path;
    explicit TempCsv(const std::string& contents) {
        static int counter = 0;
        path = "capi_test_" + std::to_string(counter++) + ".csv";
        std::ofstream out(path);
        out << contents;
    }
    ~TempCsv() { std::remove(path.c_str()); }
};

ivt_dataset* small_dataset() {
    const std::vector<double> y = {0.1, 0.7, 0.3, 0.9, 0.2, 0.8, 0.4, 0.6, 0.5, 0.15};
    const char* d[] = {"0", "1", "0", "1", "1", "0", "1", "0", "1", "0"};
    const char* z[] = {"0", "0", "0", "0", "0", "1", "1", "1", "1", "1"};
    ivt_dataset* data = nullptr;
    REQUIRE(ivt_dataset_from_rows(10, y.data(), d, z, nullptr, &data) == IVT_OK);
    return data;
}

}  // namespace

TEST_CASE("c api: dataset construction and introspection") {
    ivt_dataset* data = small_dataset();
    CHECK(ivt_dataset_n(data) == 10);
    CHECK(ivt_dataset_levels(data, 'd') == 2);
    CHECK(ivt_dataset_levels(data, 'z') == 2);
    CHECK(ivt_dataset_levels(data, 'x') == 0);
    ivt_dataset_free(data);
}

TEST_CASE("c api: error codes") {
    SUBCASE("null arguments") {
        CHECK(ivt_dataset_read_csv(nullptr, "y", "d", "z", nullptr, nullptr) == IVT_ERR_ARG);
    }
    SUBCASE("data errors surface as IVT_ERR_DATA") {
        TempCsv csv("y,d,z\n1.0,0,0\nNA,1,1\n");
        ivt_dataset* data = nullptr;
        CHECK(ivt_dataset_read_csv(csv.path.c_str(), "y", "d", "z", nullptr, &data) ==
              IVT_ERR_DATA);
        const std::string message = ivt_last_error();
        CHECK(message.find("row 3") != std::string::npos);
    }
    SUBCASE("missing column") {
        TempCsv csv("y,d,z\n1.0,0,0\n2.0,1,1\n");
        ivt_dataset* data = nullptr;
        CHECK(ivt_dataset_read_csv(csv.path.c_str(), "wage", "d", "z", nullptr, &data) ==
              IVT_ERR_DATA);
    }
    SUBCASE("config errors surface as IVT_ERR_CONFIG") {
        ivt_dataset* data = small_dataset();
        ivt_config* config = ivt_config_new();
        REQUIRE(ivt_config_set_mode(config, "unordered") == IVT_OK);
        ivt_result* result = nullptr;
        CHECK(ivt_run_test(data, config, &result) == IVT_ERR_CONFIG);  // no C-set
        CHECK(ivt_config_set_mode(config, "sideways") == IVT_ERR_CONFIG);
        CHECK(ivt_config_set_tau(config, -1.0) == IVT_ERR_CONFIG);
        CHECK(ivt_config_set_alpha(config, 2.0) == IVT_ERR_CONFIG);
        ivt_config_free(config);
        ivt_dataset_free(data);
    }
}

TEST_CASE("c api: run and report") {
    ivt_dataset* data = small_dataset();
    ivt_config* config = ivt_config_new();
    REQUIRE(ivt_config_set_mode(config, "ordered") == IVT_OK);
    REQUIRE(ivt_config_set_bootstrap(config, 60) == IVT_OK);
    REQUIRE(ivt_config_set_seed(config, 42) == IVT_OK);
    const double grid[] = {0.07, 1.0};
    REQUIRE(ivt_config_set_nu_grid(config, grid, nullptr, 2) == IVT_OK);

    ivt_result* result = nullptr;
    REQUIRE(ivt_run_test(data, config, &result) == IVT_OK);
    CHECK(ivt_result_p_value(result) >= 0.0);
    CHECK(ivt_result_p_value(result) <= 1.0);
    CHECK(ivt_result_reject(result) ==
          (ivt_result_ts(result) > ivt_result_critical_value(result) ? 1 : 0));
    CHECK(ivt_result_n_xi(result) == 2);
    CHECK(ivt_result_xi(result, 0) == 0.07);
    CHECK(ivt_result_lambda_hat(result) == doctest::Approx(0.25));

    SUBCASE("json report round-trips") {
        char* text = nullptr;
        REQUIRE(ivt_result_report_json(result, 0, &text) == IVT_OK);
        const auto parsed = nlohmann::json::parse(text);
        CHECK(parsed["result"]["ts"].get<double>() == ivt_result_ts(result));
        CHECK(parsed["dataset"]["n"].get<int>() == 10);
        CHECK(parsed["config"].contains("seed"));
        CHECK_FALSE(parsed.contains("timing_seconds"));
        // round trip: parse(serialize(report)) == parse(serialize(parse(...)))
        CHECK(nlohmann::json::parse(parsed.dump()) == parsed);
        ivt_string_free(text);
    }

    SUBCASE("reports are byte-identical across thread counts") {
        char* one = nullptr;
        REQUIRE(ivt_config_set_threads(config, 1) == IVT_OK);
        ivt_result* r1 = nullptr;
        REQUIRE(ivt_run_test(data, config, &r1) == IVT_OK);
        REQUIRE(ivt_result_report_json(r1, 0, &one) == IVT_OK);

        char* four = nullptr;
        REQUIRE(ivt_config_set_threads(config, 4) == IVT_OK);
        ivt_result* r4 = nullptr;
        REQUIRE(ivt_run_test(data, config, &r4) == IVT_OK);
        REQUIRE(ivt_result_report_json(r4, 0, &four) == IVT_OK);

        CHECK(std::string(one) == std::string(four));
        ivt_string_free(one);
        ivt_string_free(four);
        ivt_result_free(r1);
        ivt_result_free(r4);
    }

    ivt_result_free(result);
    ivt_config_free(config);
    ivt_dataset_free(data);
}

TEST_CASE("c api: csv with covariates") {
    TempCsv csv(
        "wage,ed,near,south,black\n"
        "1.0,1,0,0,0\n"
        "1.2,2,1,0,1\n"
        "0.8,1,0,1,0\n"
        "1.5,2,1,1,1\n"
        "1.1,1,1,0,0\n"
        "0.9,2,0,1,1\n"
        "1.3,1,1,1,0\n"
        "0.7,2,0,0,1\n");
    ivt_dataset* data = nullptr;
    REQUIRE(ivt_dataset_read_csv(csv.path.c_str(), "wage", "ed", "near", "south,black", &data) ==
            IVT_OK);
    CHECK(ivt_dataset_n(data) == 8);
    CHECK(ivt_dataset_levels(data, 'x') == 4);  // 2 x 2 observed combinations
    ivt_dataset_free(data);
}

TEST_CASE("c api: simulation surface") {
    SUBCASE("design and table listings") {
        char* names = nullptr;
        REQUIRE(ivt_dgp_names(&names) == IVT_OK);
        const auto parsed = nlohmann::json::parse(names);
        CHECK(parsed.is_array());
        CHECK(parsed.size() >= 15);
        ivt_string_free(names);

        char* tables = nullptr;
        REQUIRE(ivt_table_names(&tables) == IVT_OK);
        CHECK(nlohmann::json::parse(tables).size() == 7);
        ivt_string_free(tables);
    }
    SUBCASE("unknown design errors") {
        ivt_config* config = ivt_config_new();
        char* out = nullptr;
        CHECK(ivt_simulate_dgp("nope", 100, -1.0, config, 5, &out) == IVT_ERR_CONFIG);
        ivt_config_free(config);
    }
    SUBCASE("small simulation emits a sane json summary") {
        ivt_config* config = ivt_config_new();
        REQUIRE(ivt_config_set_nu_dirac(config, 0.22) == IVT_OK);
        REQUIRE(ivt_config_set_seed(config, 4) == IVT_OK);
        REQUIRE(ivt_config_set_threads(config, 2) == IVT_OK);
        char* out = nullptr;
        REQUIRE(ivt_simulate_dgp("binary-null", 150, -1.0, config, 20, &out) == IVT_OK);
        const auto parsed = nlohmann::json::parse(out);
        CHECK(parsed["n_mc"] == 20);
        CHECK(parsed["bootstrap_draws"] == 20);
        CHECK(parsed["rejection_rate"].get<double>() <= 1.0);
        ivt_string_free(out);
        ivt_config_free(config);
    }
}
