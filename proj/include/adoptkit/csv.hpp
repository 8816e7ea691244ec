#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adoptkit {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Streaming RFC-4180 reader over an in-memory buffer. Handles quoted fields,
// embedded separators/newlines and both LF and CRLF records. Row storage is
// reused across next() calls so large files do not balloon memory.
class CsvReader {
public:
    explicit CsvReader(std::string buffer);

    // Fills `row` with the next record; returns false at end of input.
    bool next(std::vector<std::string>& row);

    // 1-based line number of the record returned by the last next().
    std::size_t record_line() const { return record_line_; }

private:
    std::string buf_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

class CsvWriter {
public:
    explicit CsvWriter(std::string& out) : out_(out) {}
    void row(std::span<const std::string> fields);
    void row(std::initializer_list<std::string_view> fields);

private:
    void field(std::string_view f);
    std::string& out_;
};

// Shortest round-trip double formatting (std::to_chars); locale-free and
// stable across runs, which keeps emitted artifacts byte-identical.
std::string format_double(double v);
std::string format_int(std::int64_t v);

// Strict numeric parsing; returns false on trailing garbage or empty input.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, std::int64_t& out);

} // namespace adoptkit
