#include "eyesal/table_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "eyesal/error.hpp"

namespace eyesal {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> split_delimited_line(std::string_view line, char delim) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

DelimitedTable read_delimited(std::istream& in, std::string source_name) {
    DelimitedTable table;
    table.source_name = std::move(source_name);
    std::string line;
    std::size_t line_no = 0;
    char delim = ',';
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (!have_header) {
            if (line.front() == '#') {
                table.metadata.emplace_back(trim(std::string_view(line).substr(1)));
                continue;
            }
            delim = line.find('\t') != std::string::npos ? '\t' : ',';
            table.header = split_delimited_line(line, delim);
            have_header = true;
            continue;
        }
        auto fields = split_delimited_line(line, delim);
        if (fields.size() != table.header.size()) {
            std::ostringstream msg;
            msg << table.source_name << ":" << line_no << ": expected " << table.header.size()
                << " fields, found " << fields.size();
            throw ValidationError(msg.str());
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

DelimitedTable read_delimited_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_delimited(in, path);
}

std::optional<std::size_t> DelimitedTable::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t DelimitedTable::column(std::string_view name) const {
    if (auto idx = find_column(name)) return *idx;
    throw ValidationError(source_name + ": missing column '" + std::string(name) + "'");
}

std::optional<std::string> DelimitedTable::metadata_value(std::string_view key) const {
    for (const auto& m : metadata) {
        const auto colon = m.find(':');
        if (colon == std::string::npos) continue;
        if (trim(std::string_view(m).substr(0, colon)) == key) {
            return std::string(trim(std::string_view(m).substr(colon + 1)));
        }
    }
    return std::nullopt;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) out << ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n\t") != std::string::npos) {
            out << '"';
            for (char c : f) {
                if (c == '"') out << '"';
                out << c;
            }
            out << '"';
        } else {
            out << f;
        }
    }
    out << '\n';
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

void throw_field_error(const DelimitedTable& t, std::size_t row, std::size_t col,
                       const std::string& what) {
    std::ostringstream msg;
    msg << t.source_name << ":" << t.line_numbers.at(row) << ": field '"
        << (col < t.header.size() ? t.header[col] : std::string("?")) << "': " << what;
    throw ValidationError(msg.str());
}

double parse_double_field(const DelimitedTable& t, std::size_t row, std::size_t col) {
    const std::string& s = t.rows.at(row).at(col);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw_field_error(t, row, col, "expected a number, got '" + s + "'");
    }
    return v;
}

std::int64_t parse_int_field(const DelimitedTable& t, std::size_t row, std::size_t col) {
    const std::string& s = t.rows.at(row).at(col);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw_field_error(t, row, col, "expected an integer, got '" + s + "'");
    }
    return v;
}

std::optional<std::int64_t> parse_optional_int_field(const DelimitedTable& t, std::size_t row,
                                                     std::size_t col) {
    if (t.rows.at(row).at(col).empty()) return std::nullopt;
    return parse_int_field(t, row, col);
}

}  // namespace eyesal
