#include "qbrown/csv.hpp"

#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace qbrown::csv {

std::string number(double v) { return fmt::format("{:.17g}", v); }

std::string field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void Writer::comment(std::string_view text) { os_ << "# " << text << "\n"; }

void Writer::header(const std::vector<std::string>& columns) {
    columns_ = columns.size();
    std::vector<std::string> quoted;
    quoted.reserve(columns.size());
    for (const auto& c : columns) quoted.push_back(field(c));
    raw_row(quoted);
}

void Writer::row(const std::vector<double>& values) {
    std::vector<std::string> fields;
    fields.reserve(values.size());
    for (double v : values) fields.push_back(number(v));
    raw_row(fields);
}

void Writer::raw_row(const std::vector<std::string>& fields) {
    if (columns_ != 0 && fields.size() != columns_) {
        throw std::logic_error(fmt::format("csv: row has {} fields, header has {}", fields.size(), columns_));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os_ << ',';
        os_ << fields[i];
    }
    os_ << "\n";
}

}  // namespace qbrown::csv
