#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mixgen {

/// Shortest round-trip-safe decimal text with 17 significant digits.
std::string format_number(double value);

/// Minimal CSV emitter with a fixed header. Doubles always use
/// format_number; integers are written verbatim.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> columns);

    CsvWriter& cell(double value);
    CsvWriter& cell(std::int64_t value);
    CsvWriter& cell(std::uint64_t value);
    CsvWriter& cell(int value) { return cell(static_cast<std::int64_t>(value)); }
    CsvWriter& cell(std::string_view text);
    /// Ends the current row; throws if the cell count does not match the header.
    void end_row();

    std::size_t columns() const noexcept { return columns_.size(); }

private:
    void separator();

    std::ostream& out_;
    std::vector<std::string> columns_;
    std::size_t filled_ = 0;
};

}  // namespace mixgen
