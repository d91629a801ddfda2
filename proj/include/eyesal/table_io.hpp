#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eyesal {

/// A delimited text table with a header row. Lines starting with '#'
/// before the header are kept as metadata ("key: value" or free text).
struct DelimitedTable {
    std::vector<std::string> metadata;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based line number in the source file for each row.
    std::vector<std::size_t> line_numbers;
    std::string source_name;

    /// Index of a column; throws ValidationError if absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;

    /// Value of a "key: value" metadata line, if present.
    std::optional<std::string> metadata_value(std::string_view key) const;
};

/// Reads a comma- or tab-separated file. The delimiter is taken from the
/// header line: tab if it contains one, comma otherwise. Fields may be
/// double-quoted with "" as the escaped quote.
DelimitedTable read_delimited(std::istream& in, std::string source_name = "<stream>");
DelimitedTable read_delimited_file(const std::string& path);

std::vector<std::string> split_delimited_line(std::string_view line, char delim);

/// Writes one CSV row, quoting fields that need it.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip decimal for a double.
std::string format_double(double value);

// Field parsers. Each throws ValidationError naming the source, line and
// column when the text does not parse completely.
double parse_double_field(const DelimitedTable& t, std::size_t row, std::size_t col);
std::int64_t parse_int_field(const DelimitedTable& t, std::size_t row, std::size_t col);
std::optional<std::int64_t> parse_optional_int_field(const DelimitedTable& t, std::size_t row,
                                                     std::size_t col);

[[noreturn]] void throw_field_error(const DelimitedTable& t, std::size_t row, std::size_t col,
                                    const std::string& what);

}  // namespace eyesal
