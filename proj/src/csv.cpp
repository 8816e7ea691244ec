#include "adoptkit/csv.hpp"
#include "adoptkit/civil_date.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace adoptkit {

CsvReader::CsvReader(std::string buffer) : buf_(std::move(buffer)) {}

bool CsvReader::next(std::vector<std::string>& row) {
    if (pos_ >= buf_.size()) return false;
    row.clear();
    record_line_ = line_;
    std::string field;
    bool quoted = false;
    bool done = false;
    while (!done) {
        if (pos_ >= buf_.size()) {
            if (quoted) throw CsvError("unterminated quoted field at line " + std::to_string(record_line_));
            break;
        }
        char c = buf_[pos_++];
        if (quoted) {
            if (c == '"') {
                if (pos_ < buf_.size() && buf_[pos_] == '"') {
                    field.push_back('"');
                    ++pos_;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty())
                throw CsvError("stray quote inside unquoted field at line " + std::to_string(line_));
            quoted = true;
            break;
        case ',':
            row.push_back(std::move(field));
            field.clear();
            break;
        case '\r':
            if (pos_ < buf_.size() && buf_[pos_] == '\n') ++pos_;
            ++line_;
            done = true;
            break;
        case '\n':
            ++line_;
            done = true;
            break;
        default:
            field.push_back(c);
        }
    }
    row.push_back(std::move(field));
    return true;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CsvError("cannot write file: " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw CsvError("short write: " + path);
}

void CsvWriter::field(std::string_view f) {
    bool needs_quote = f.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quote) {
        out_.append(f);
        return;
    }
    out_.push_back('"');
    for (char c : f) {
        if (c == '"') out_.push_back('"');
        out_.push_back(c);
    }
    out_.push_back('"');
}

void CsvWriter::row(std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_.push_back(',');
        field(fields[i]);
    }
    out_.push_back('\n');
}

void CsvWriter::row(std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
        if (!first) out_.push_back(',');
        first = false;
        field(f);
    }
    out_.push_back('\n');
}

std::string format_double(double v) {
    char tmp[64];
    auto [p, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v);
    (void)ec;
    return std::string(tmp, p);
}

std::string format_int(std::int64_t v) {
    char tmp[32];
    auto [p, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v);
    (void)ec;
    return std::string(tmp, p);
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

bool parse_int(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

// ---- dates and times --------------------------------------------------------

static bool all_digits(std::string_view s) {
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return !s.empty();
}

std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto ys = s.substr(0, 4), ms = s.substr(5, 2), ds = s.substr(8, 2);
    if (!all_digits(ys) || !all_digits(ms) || !all_digits(ds)) return std::nullopt;
    int y = (ys[0] - '0') * 1000 + (ys[1] - '0') * 100 + (ys[2] - '0') * 10 + (ys[3] - '0');
    unsigned m = static_cast<unsigned>((ms[0] - '0') * 10 + (ms[1] - '0'));
    unsigned d = static_cast<unsigned>((ds[0] - '0') * 10 + (ds[1] - '0'));
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    Date days = days_from_civil(y, m, d);
    CivilDate back = civil_from_days(days);
    if (back.year != y || back.month != m || back.day != d) return std::nullopt;
    return days;
}

std::optional<MinuteOfDay> parse_time(std::string_view s) {
    if (s.size() != 5 || s[2] != ':') return std::nullopt;
    auto hs = s.substr(0, 2), ms = s.substr(3, 2);
    if (!all_digits(hs) || !all_digits(ms)) return std::nullopt;
    int h = (hs[0] - '0') * 10 + (hs[1] - '0');
    int m = (ms[0] - '0') * 10 + (ms[1] - '0');
    if (h > 23 || m > 59) return std::nullopt;
    return h * 60 + m;
}

std::string format_date(Date d) {
    CivilDate c = civil_from_days(d);
    char tmp[16];
    std::snprintf(tmp, sizeof(tmp), "%04d-%02u-%02u", c.year, c.month, c.day);
    return tmp;
}

std::string format_time(MinuteOfDay m) {
    char tmp[16];
    std::snprintf(tmp, sizeof(tmp), "%02d:%02d", m / 60, m % 60);
    return tmp;
}

} // namespace adoptkit
