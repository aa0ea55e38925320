#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "curvcrit/errors.hpp"

namespace curvcrit {

/// Shortest representation that round-trips a double exactly.
inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Strict full-string double parse; key names the offender in errors.
inline double parse_double(const std::string& s, const std::string& key) {
    const std::string t = trim(s);
    if (t.empty()) throw ConfigError("empty value for " + key);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw ConfigError("bad numeric value for " + key + ": " + t);
    return v;
}

inline long long parse_int(const std::string& s, const std::string& key) {
    const std::string t = trim(s);
    if (t.empty()) throw ConfigError("empty value for " + key);
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw ConfigError("bad integer value for " + key + ": " + t);
    return v;
}

inline unsigned long long parse_uint(const std::string& s, const std::string& key) {
    const std::string t = trim(s);
    if (t.empty()) throw ConfigError("empty value for " + key);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw ConfigError("bad integer value for " + key + ": " + t);
    return v;
}

/// Reads a whole text file or throws IOError.
inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IOError("cannot open: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw IOError("cannot open for writing: " + path);
    os << content;
    if (!os) throw IOError("write failed: " + path);
}

/// Parses a CSV file written by this tool: plain comma separation, first row
/// is the header. No quoting is ever emitted, so none is parsed.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw IOError("missing CSV column: " + name);
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IOError("cannot open: " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        auto cells = split(trim(line), ',');
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size())
                throw IOError("ragged CSV row in " + path);
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw IOError("empty CSV: " + path);
    return t;
}

} // namespace curvcrit
