#include "core/textio.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace roadcell {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
        --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_int64(const std::string& s, std::int64_t* out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(t.c_str(), &end, 10);
    if (errno != 0 || end != t.c_str() + t.size()) return false;
    *out = static_cast<std::int64_t>(v);
    return true;
}

bool parse_double(const std::string& s, double* out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (errno != 0 || end != t.c_str() + t.size()) return false;
    *out = v;
    return true;
}

bool parse_iso_timestamp(const std::string& s, int* year, int* month, int* day, int* hour,
                         int* minute) {
    const std::string t = trim(s);
    if (t.size() != 16 && t.size() != 19) return false;
    auto digits = [&](std::size_t pos, std::size_t n, int* v) {
        int acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            char c = t[pos + i];
            if (c < '0' || c > '9') return false;
            acc = acc * 10 + (c - '0');
        }
        *v = acc;
        return true;
    };
    if (!digits(0, 4, year) || t[4] != '-' || !digits(5, 2, month) || t[7] != '-' ||
        !digits(8, 2, day))
        return false;
    if (t[10] != 'T' && t[10] != ' ') return false;
    if (!digits(11, 2, hour) || t[13] != ':' || !digits(14, 2, minute)) return false;
    if (t.size() == 19) {
        int sec = 0;
        if (t[16] != ':' || !digits(17, 2, &sec) || sec != 0) return false;
    }
    return true;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrKind::io, "cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrKind::io, "read error on file: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrKind::io, "cannot open file for writing: " + path);
    out << content;
    out.flush();
    if (!out) fail(ErrKind::io, "write error on file: " + path);
}

}  // namespace roadcell
