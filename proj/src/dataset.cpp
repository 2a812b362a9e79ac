#include "types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace ivtest {

Mode mode_from_string(const std::string& s) {
    if (s == "ordered") return Mode::Ordered;
    if (s == "unordered") return Mode::Unordered;
    if (s == "binary") return Mode::Binary;
    if (s == "ordered-with-covariates") return Mode::OrderedCov;
    if (s == "unordered-with-covariates") return Mode::UnorderedCov;
    throw ConfigError("unknown mode '" + s +
                      "' (expected ordered, unordered, binary, "
                      "ordered-with-covariates, unordered-with-covariates)");
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::Ordered: return "ordered";
        case Mode::Unordered: return "unordered";
        case Mode::Binary: return "binary";
        case Mode::OrderedCov: return "ordered-with-covariates";
        case Mode::UnorderedCov: return "unordered-with-covariates";
    }
    return "?";
}

namespace {

bool parse_number(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

// Sorts labels numerically when every label parses as a number, otherwise
// lexicographically. Returns label -> code.
std::map<std::string, std::int32_t> natural_coding(const std::set<std::string>& labels) {
    std::vector<std::string> ordered(labels.begin(), labels.end());
    bool all_numeric = !ordered.empty();
    std::vector<double> values(ordered.size());
    for (std::size_t i = 0; i < ordered.size() && all_numeric; ++i) {
        all_numeric = parse_number(ordered[i], values[i]);
    }
    if (all_numeric) {
        std::vector<std::size_t> idx(ordered.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (values[a] != values[b]) return values[a] < values[b];
            return ordered[a] < ordered[b];
        });
        std::vector<std::string> sorted;
        sorted.reserve(ordered.size());
        for (auto i : idx) sorted.push_back(ordered[i]);
        ordered = std::move(sorted);
    }
    std::map<std::string, std::int32_t> coding;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        coding[ordered[i]] = static_cast<std::int32_t>(i);
    }
    return coding;
}

std::vector<std::string> labels_from_coding(const std::map<std::string, std::int32_t>& coding) {
    std::vector<std::string> labels(coding.size());
    for (const auto& [label, code] : coding) labels[static_cast<std::size_t>(code)] = label;
    return labels;
}

}  // namespace

Dataset encode_dataset(const std::vector<Row>& rows,
                       const std::vector<std::string>& instrument_order, bool strict) {
    if (rows.empty()) throw DataError("empty input: no observations");

    const bool has_x = rows.front().x.has_value();
    std::set<std::string> d_set, z_set, x_set;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        if (!std::isfinite(r.y)) {
            throw DataError("non-finite outcome at row " + std::to_string(i + 1));
        }
        if (r.x.has_value() != has_x) {
            throw DataError("covariate present in some rows but missing at row " +
                            std::to_string(i + 1));
        }
        d_set.insert(r.d);
        z_set.insert(r.z);
        if (has_x) x_set.insert(*r.x);
    }

    auto d_coding = natural_coding(d_set);
    auto x_coding = natural_coding(x_set);

    std::map<std::string, std::int32_t> z_coding;
    if (!instrument_order.empty()) {
        std::set<std::string> given(instrument_order.begin(), instrument_order.end());
        if (given != z_set || given.size() != instrument_order.size()) {
            throw ConfigError("instrument order must list each observed instrument label exactly once");
        }
        for (std::size_t i = 0; i < instrument_order.size(); ++i) {
            z_coding[instrument_order[i]] = static_cast<std::int32_t>(i);
        }
    } else {
        z_coding = natural_coding(z_set);
    }
    if (strict && z_coding.size() < 2) {
        throw DataError("fewer than 2 instrument levels");
    }

    Dataset data;
    data.y.reserve(rows.size());
    data.d.reserve(rows.size());
    data.z.reserve(rows.size());
    if (has_x) data.x.reserve(rows.size());
    for (const Row& r : rows) {
        data.y.push_back(r.y);
        data.d.push_back(d_coding.at(r.d));
        data.z.push_back(z_coding.at(r.z));
        if (has_x) data.x.push_back(x_coding.at(*r.x));
    }
    data.d_labels = labels_from_coding(d_coding);
    data.z_labels = labels_from_coding(z_coding);
    if (has_x) data.x_labels = labels_from_coding(x_coding);
    return data;
}

std::pair<int, int> normalize_extremes(const Dataset& data) {
    if (data.d_levels() < 2) {
        throw DataError("single treatment level: cannot normalize extremes");
    }
    // Codes are assigned in treatment order, so the extremes are the ends.
    return {0, data.d_levels() - 1};
}

Dataset apply_instrument_order(const Dataset& data, const std::vector<std::string>& order) {
    if (order.empty()) return data;
    std::set<std::string> observed(data.z_labels.begin(), data.z_labels.end());
    std::set<std::string> given(order.begin(), order.end());
    if (observed != given || given.size() != order.size()) {
        throw ConfigError("instrument order must list each observed instrument label exactly once");
    }
    std::vector<std::int32_t> perm(data.z_labels.size());
    for (std::size_t new_code = 0; new_code < order.size(); ++new_code) {
        const auto it = std::find(data.z_labels.begin(), data.z_labels.end(), order[new_code]);
        perm[static_cast<std::size_t>(it - data.z_labels.begin())] =
            static_cast<std::int32_t>(new_code);
    }
    Dataset out = data;
    for (auto& code : out.z) code = perm[static_cast<std::size_t>(code)];
    out.z_labels.assign(order.begin(), order.end());
    return out;
}

double NuMeasure::total() const {
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
}

namespace {

void validate_measure(const std::vector<double>& pts, const std::vector<double>& ws) {
    if (pts.empty()) throw ConfigError("nu measure needs at least one xi point");
    if (pts.size() != ws.size()) throw ConfigError("nu measure points/weights length mismatch");
    double prev = 0.0;
    for (double p : pts) {
        if (!(p > 0.0) || p > 1.0) {
            throw ConfigError("xi points must lie in (0, 1]");
        }
        if (p <= prev) throw ConfigError("xi points must be strictly increasing");
        prev = p;
    }
    for (double w : ws) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("nu weights must be positive and finite");
    }
}

}  // namespace

NuMeasure NuMeasure::dirac(double xi) { return custom({xi}, {1.0}); }

NuMeasure NuMeasure::uniform(std::vector<double> pts) {
    std::vector<double> ws(pts.size(), pts.empty() ? 1.0 : 1.0 / static_cast<double>(pts.size()));
    return custom(std::move(pts), std::move(ws));
}

NuMeasure NuMeasure::custom(std::vector<double> pts, std::vector<double> ws) {
    validate_measure(pts, ws);
    NuMeasure nu;
    nu.points = std::move(pts);
    nu.weights = std::move(ws);
    return nu;
}

NuMeasure NuMeasure::standard_grid() {
    return uniform({0.07, 0.10, 0.13, 0.16, 0.19, 0.22, 0.25, 0.28, 0.30, 1.0});
}

NuMeasure NuMeasure::small_grid() {
    return uniform({0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10});
}

NuMeasure NuMeasure::bound_grid(double bound) {
    if (!(bound > 0.0)) throw ConfigError("variance bound must be positive to build a xi grid");
    std::vector<double> pts;
    pts.reserve(10);
    for (int i = 1; i <= 9; ++i) pts.push_back(0.1 * i * bound);
    pts.push_back(bound);
    if (pts.back() > 1.0) pts.back() = 1.0;  // bound never exceeds 1/sqrt(2) in practice
    return uniform(std::move(pts));
}

bool NuMeasure::covers_bound(double bound) const {
    if (points.empty()) return false;
    return points.back() >= bound;
}

void TestConfig::validate() const {
    if (!(tau_n > 0.0)) throw ConfigError("tau must be positive (or inf)");
    if (!(xi0 > 0.0)) throw ConfigError("xi0 must be positive");
    if (n_bootstrap < 1) throw ConfigError("bootstrap replication count must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(eta >= 0.0)) throw ConfigError("eta must be nonnegative");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    const bool unordered = mode == Mode::Unordered || mode == Mode::UnorderedCov;
    if (unordered && c_set.empty()) {
        throw ConfigError("unordered modes require a nonempty C-set of (d, z, z') triples");
    }
    if (!unordered && !c_set.empty()) {
        throw ConfigError("C-set triples only apply to unordered modes");
    }
}

}  // namespace ivtest
