#include "mixgen/csv.hpp"

#include "mixgen/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

namespace mixgen {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    // Normalize negative zero so identical results print identically.
    if (value == 0.0) value = 0.0;
    return fmt::format("{:.17g}", value);
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> columns)
    : out_(out), columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i > 0) out_ << ',';
        out_ << columns_[i];
    }
    out_ << '\n';
}

void CsvWriter::separator() {
    if (filled_ >= columns_.size()) throw ConsistencyError("CSV row has more cells than columns");
    if (filled_ > 0) out_ << ',';
    ++filled_;
}

CsvWriter& CsvWriter::cell(double value) {
    separator();
    out_ << format_number(value);
    return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t value) {
    separator();
    out_ << value;
    return *this;
}

CsvWriter& CsvWriter::cell(std::uint64_t value) {
    separator();
    out_ << value;
    return *this;
}

CsvWriter& CsvWriter::cell(std::string_view text) {
    separator();
    out_ << text;
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_.size()) throw ConsistencyError("CSV row has fewer cells than columns");
    out_ << '\n';
    filled_ = 0;
}

}  // namespace mixgen
