#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivtest {

/// Malformed or inconsistent input data (CSV contents, impossible samples).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid test configuration (bad tuning values, unknown modes, bad C-set).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode {
    Ordered,
    Unordered,
    Binary,
    OrderedCov,
    UnorderedCov,
};

Mode mode_from_string(const std::string& s);
std::string to_string(Mode mode);

inline bool mode_has_covariates(Mode m) { return m == Mode::OrderedCov || m == Mode::UnorderedCov; }
inline bool mode_is_ordered(Mode m) {
    return m == Mode::Ordered || m == Mode::Binary || m == Mode::OrderedCov;
}

/// One input observation before encoding. Labels are kept as text so that
/// unordered treatments ("a", "b", ...) and numeric codes share one path.
struct Row {
    double y = 0.0;
    std::string d;
    std::string z;
    std::optional<std::string> x;
};

/// Encoded sample. Treatment/instrument/covariate labels are mapped to dense
/// codes 0..L-1; label tables are retained for reporting and decoding.
struct Dataset {
    std::vector<double> y;
    std::vector<std::int32_t> d;
    std::vector<std::int32_t> z;
    std::vector<std::int32_t> x;  // empty when no covariates

    std::vector<std::string> d_labels;
    std::vector<std::string> z_labels;
    std::vector<std::string> x_labels;

    std::int64_t n() const { return static_cast<std::int64_t>(y.size()); }
    int d_levels() const { return static_cast<int>(d_labels.size()); }
    int z_levels() const { return static_cast<int>(z_labels.size()); }
    int x_levels() const { return x_labels.empty() ? 1 : static_cast<int>(x_labels.size()); }
    bool has_covariates() const { return !x.empty(); }
};

/// Encodes labeled rows into a Dataset. Labels sort numerically when every
/// label in the column parses as a number, lexicographically otherwise;
/// `instrument_order` overrides the instrument ordering. With `strict` the
/// instrument must take at least two values (the testing path); simulated
/// boundary samples may relax this.
Dataset encode_dataset(const std::vector<Row>& rows,
                       const std::vector<std::string>& instrument_order = {},
                       bool strict = true);

/// Codes of the minimal and maximal observed treatment in ordered mode.
std::pair<int, int> normalize_extremes(const Dataset& data);

/// Re-encodes the instrument codes so that `order` becomes the code order.
/// `order` must list every observed instrument label exactly once.
Dataset apply_instrument_order(const Dataset& data, const std::vector<std::string>& order);

/// Finite discrete measure on the trimming grid: points in (0, 1], strictly
/// increasing, with positive weights.
struct NuMeasure {
    std::vector<double> points;
    std::vector<double> weights;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
    double total() const;

    static NuMeasure dirac(double xi);
    static NuMeasure uniform(std::vector<double> pts);
    static NuMeasure custom(std::vector<double> pts, std::vector<double> ws);

    /// The ten-point grid 0.07, 0.10, ..., 0.28, 0.30, 1 with equal weights.
    static NuMeasure standard_grid();
    /// 0.01, 0.02, ..., 0.10 with equal weights (small-scale grids used when
    /// conditioning cells shrink the variance bound).
    static NuMeasure small_grid();
    /// 0.1*b, 0.2*b, ..., 0.9*b, b for a variance bound b, equal weights.
    static NuMeasure bound_grid(double bound);

    /// True when some grid point reaches the given variance bound, i.e. the
    /// unweighted KS member is represented.
    bool covers_bound(double bound) const;
};

/// One unordered-monotonicity triple (d, z, z'): 1{D_{z'}=d} <= 1{D_z=d}.
struct CTriple {
    std::string d;
    std::string z;
    std::string z_prime;

    bool operator==(const CTriple&) const = default;
};

struct TestConfig {
    double tau_n = 2.0;  // contact-set threshold; +inf keeps every index
    double xi0 = 0.001;  // contact-set trimming constant
    int n_bootstrap = 1000;
    double alpha = 0.05;
    double eta = 0.0;  // critical-value floor, applied as max(c, eta)
    std::uint64_t seed = 0;
    Mode mode = Mode::Ordered;
    std::vector<CTriple> c_set;                  // required in unordered modes
    std::vector<std::string> instrument_order;   // optional z ordering override
    NuMeasure nu;                                // empty: resolved per mode at run time
    int threads = 1;
    // Stored-cache threshold: above this many indices the engine recomputes
    // phi/sigma per bootstrap pass instead of materializing them.
    std::uint64_t cache_limit = 50'000'000;

    void validate() const;
};

/// Index attaining a per-xi supremum, for diagnostics.
struct SupArgmax {
    int pair = -1;
    bool is_fosd = false;
    int d_code = -1;  // treatment code, or threshold code for FOSD members
    int sign = 1;
    bool empty_interval = false;  // interval containing no matching observation
    double lo = 0.0;
    double hi = 0.0;
};

struct TestResult {
    double ts = 0.0;
    double critical_value = 0.0;
    double p_value = 1.0;
    bool reject = false;

    std::vector<double> xi;  // grid, ascending
    std::vector<double> nu_weights;  // resolved measure weights on the grid
    std::vector<double> per_xi_sup;
    std::vector<SupArgmax> per_xi_argmax;

    std::uint64_t contact_set_size = 0;
    std::vector<double> bootstrap_stats;
    double lambda_hat = 0.0;
    double t_n = 0.0;

    double sigma_bound = 0.0;     // empirical variance-bound diagnostic
    bool xi_covers_bound = true;  // some xi >= sigma_bound
    std::vector<std::string> warnings;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace ivtest
