#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/tokenizer.hpp>

#include "sbarg/core_types.hpp"

namespace sbarg::csv {

struct Row {
    int line; // 1-based line number in the file
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::map<std::string, std::size_t> column; // normalized name -> index
    std::vector<Row> rows;

    std::size_t require(const std::string& name) const {
        auto it = column.find(detail::lower_alnum(name));
        if (it == column.end()) throw DataError("missing required column '" + name + "'");
        return it->second;
    }
    std::optional<std::size_t> find(const std::string& name) const {
        auto it = column.find(detail::lower_alnum(name));
        if (it == column.end()) return std::nullopt;
        return it->second;
    }
};

inline std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
    using Sep = boost::escaped_list_separator<char>;
    boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
    std::vector<std::string> out;
    for (const auto& t : tok) out.push_back(trim(t));
    return out;
}

// Header row required. Blank lines are skipped.
inline Table read(std::istream& in) {
    Table t;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        try {
            fields = split_line(line);
        } catch (const boost::escaped_list_error& ex) {
            throw DataError("line " + std::to_string(lineno) + ": " + ex.what());
        }
        if (!have_header) {
            t.header = fields;
            for (std::size_t i = 0; i < fields.size(); ++i) t.column[detail::lower_alnum(fields[i])] = i;
            have_header = true;
            continue;
        }
        t.rows.push_back({lineno, std::move(fields)});
    }
    if (!have_header) throw DataError("empty file: header row required");
    return t;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read(in);
}

inline std::optional<double> parse_double(const std::string& s) {
    double v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_int(const std::string& s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace sbarg::csv
