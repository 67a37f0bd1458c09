// csv.hpp: RFC-4180-style CSV output with 17 significant digits

#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qbrown::csv {

// Shortest round-trippable form is not used on purpose: every number is
// printed with exactly 17 significant digits so output is byte-stable.
std::string number(double v);

// Quotes a field if it contains a comma, quote, or newline.
std::string field(std::string_view s);

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    // "# key=value" lines ahead of the header.
    void comment(std::string_view text);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }
    // Mixed rows: already-formatted fields.
    void raw_row(const std::vector<std::string>& fields);

private:
    std::ostream& os_;
    std::size_t columns_{0};
};

}  // namespace qbrown::csv
