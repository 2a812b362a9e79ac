// Naive reference implementation used by the test suites. It enumerates the
// index families directly from their definitions and evaluates every
// empirical quantity by filtering rows, independently of the engine's prefix
// sums and breakpoint compression.
#pragma once

#include <cstdint>
#include <vector>

#include "types.hpp"

namespace oracle {

struct Member {
    bool is_fosd = false;
    int sign = 1;
    int d_code = -1;  // treatment code, or threshold code for FOSD members
    double lo = 0.0;  // closed interval [lo, hi] (interval members only)
    double hi = 0.0;
    int g1_z = 0, g2_z = 0;
    int x_cell = -1;  // -1 when no covariate conditioning
};

struct Spaces {
    std::vector<Member> members;
    std::vector<std::pair<int, int>> lambda_cells;  // (z, x) pairs; x = -1 without covariates
};

/// Members of H x G for the dataset and mode, with interval endpoints drawn
/// from `endpoints` (the distinct observed outcomes when empty).
Spaces enumerate_spaces(const ivtest::Dataset& data, ivtest::Mode mode,
                        const std::vector<ivtest::CTriple>& c_set,
                        std::vector<double> endpoints = {});

struct Eval {
    double phi = 0.0;
    double sigma = 0.0;
};

double lambda_hat(const ivtest::Dataset& data, const Spaces& spaces);

/// phi-hat and sigma-hat for one member, from the literal formulas. Optional
/// multiplicity weights turn the empirical measure into the weighted
/// bootstrap measure.
Eval evaluate(const ivtest::Dataset& data, const Member& member, double t_n,
              const std::vector<std::int32_t>* weights = nullptr);

struct Statistic {
    double lambda_hat = 0.0;
    double t_n = 0.0;
    std::vector<double> per_xi_sup;
    double ts = 0.0;
};

Statistic statistic(const ivtest::Dataset& data, ivtest::Mode mode,
                    const std::vector<ivtest::CTriple>& c_set, const ivtest::NuMeasure& nu,
                    std::vector<double> endpoints = {});

/// Raw contact-set size and per-member membership flags.
std::vector<std::uint8_t> contact_members(const ivtest::Dataset& data, const Spaces& spaces,
                                          double tau, double xi0);

/// Bootstrap statistic for one draw: weighted measures, recentered, supremum
/// restricted to the contact members of the original sample.
double bootstrap_statistic(const ivtest::Dataset& data, ivtest::Mode mode,
                           const std::vector<ivtest::CTriple>& c_set, const ivtest::NuMeasure& nu,
                           const std::vector<std::int32_t>& weights, double tau, double xi0);

}  // namespace oracle
