#pragma once

#include <string>
#include <vector>

#include "types.hpp"

namespace ivtest {

struct ColumnMap {
    std::string y;
    std::string d;
    std::string z;
    std::vector<std::string> x;  // combined into one covariate cell per row
};

/// Reads an RFC-4180-style CSV (header row required, quoted fields allowed)
/// and encodes the mapped columns. Throws DataError with a row-numbered
/// message on malformed input.
Dataset read_csv(const std::string& path, const ColumnMap& columns,
                 const std::vector<std::string>& instrument_order = {});

std::vector<Row> read_csv_rows(const std::string& path, const ColumnMap& columns);

}  // namespace ivtest
