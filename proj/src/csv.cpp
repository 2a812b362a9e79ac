#include "csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ivtest {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// Splits one CSV record, honoring quotes with "" escapes. `pos` is advanced
// past the record (records may span lines inside quotes).
std::vector<std::string> next_record(const std::string& text, std::size_t& pos) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            ++pos;
            break;
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace

std::vector<Row> read_csv_rows(const std::string& path, const ColumnMap& columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open CSV file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);  // BOM
    if (trim(text).empty()) throw DataError("empty CSV file '" + path + "'");

    std::size_t pos = 0;
    const std::vector<std::string> header = next_record(text, pos);

    auto column_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return static_cast<std::int64_t>(i);
        }
        throw DataError("CSV is missing column '" + name + "'");
    };

    const auto yi = column_index(columns.y);
    const auto di = column_index(columns.d);
    const auto zi = column_index(columns.z);
    std::vector<std::int64_t> xi;
    for (const auto& xc : columns.x) xi.push_back(column_index(xc));

    std::vector<Row> rows;
    std::int64_t line = 1;
    while (pos < text.size()) {
        const auto fields = next_record(text, pos);
        ++line;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
        if (fields.size() != header.size()) {
            throw DataError("row " + std::to_string(line) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        }
        Row row;
        const std::string y_text = trim(fields[static_cast<std::size_t>(yi)]);
        double y = 0.0;
        const auto* first = y_text.data();
        const auto* last = y_text.data() + y_text.size();
        const auto [ptr, ec] = std::from_chars(first, last, y);
        if (ec != std::errc() || ptr != last || !std::isfinite(y)) {
            throw DataError("row " + std::to_string(line) + ": outcome column '" + columns.y +
                            "' has non-numeric or non-finite value '" + y_text + "'");
        }
        row.y = y;
        row.d = trim(fields[static_cast<std::size_t>(di)]);
        row.z = trim(fields[static_cast<std::size_t>(zi)]);
        if (row.d.empty() || row.z.empty()) {
            throw DataError("row " + std::to_string(line) + ": empty treatment or instrument label");
        }
        if (!xi.empty()) {
            std::string combined;
            for (std::size_t k = 0; k < xi.size(); ++k) {
                const std::string v = trim(fields[static_cast<std::size_t>(xi[k])]);
                if (v.empty()) {
                    throw DataError("row " + std::to_string(line) + ": empty covariate value in '" +
                                    columns.x[k] + "'");
                }
                if (k > 0) combined += '|';
                combined += v;
            }
            row.x = combined;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("CSV file '" + path + "' has a header but no data rows");
    return rows;
}

Dataset read_csv(const std::string& path, const ColumnMap& columns,
                 const std::vector<std::string>& instrument_order) {
    return encode_dataset(read_csv_rows(path, columns), instrument_order);
}

}  // namespace ivtest
