#pragma once

// On-disk formats.
//   measure:  header `position,weight`, one atom per line.
//   density:  header `L,m`, one line with both values, then header
//             `cell_left,value` and m lines.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "wallsim/continuum.hpp"
#include "wallsim/error.hpp"
#include "wallsim/transport.hpp"

namespace wallsim::io {

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(trim(cell));
    return out;
}

inline double number(const std::string& cell, std::size_t line) {
    // strtod rather than stod: subnormal values are valid data, not range errors
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || std::isinf(v)) {
        throw DomainError("csv line " + std::to_string(line) + ": not a number: '" + cell + "'");
    }
    return v;
}

// Non-empty lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> lines(std::istream& in) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::size_t no = 0;
    for (std::string line; std::getline(in, line);) {
        ++no;
        line = trim(line);
        if (!line.empty()) out.emplace_back(no, line);
    }
    return out;
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_measure(const EmpiricalMeasure& mu, std::ostream& out) {
    out << "position,weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out << detail::num(mu.atoms()[i]) << ',' << detail::num(mu.weights()[i]) << '\n';
    }
}

inline void write_density(const DensityGrid& rho, std::ostream& out) {
    out << "L,m\n" << detail::num(rho.length()) << ',' << rho.cells() << "\ncell_left,value\n";
    for (std::size_t j = 0; j < rho.cells(); ++j) {
        out << detail::num(rho.cell_left(j)) << ',' << detail::num(rho[j]) << '\n';
    }
}

using Distribution = std::variant<EmpiricalMeasure, DensityGrid>;

/// Reads either format, dispatching on the header line.
inline Distribution read_distribution(std::istream& in) {
    const auto rows = detail::lines(in);
    if (rows.empty()) throw DomainError("csv: empty input");
    const std::string header = rows.front().second;
    if (header == "position,weight") {
        std::vector<double> atoms, weights;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto cells = detail::split(rows[r].second);
            if (cells.size() != 2) {
                throw DomainError("csv line " + std::to_string(rows[r].first) + ": expected 2 fields");
            }
            atoms.push_back(detail::number(cells[0], rows[r].first));
            weights.push_back(detail::number(cells[1], rows[r].first));
        }
        return EmpiricalMeasure::sorted(std::move(atoms), std::move(weights));
    }
    if (header == "L,m") {
        if (rows.size() < 3) throw DomainError("csv: truncated density file");
        const auto dims = detail::split(rows[1].second);
        if (dims.size() != 2) throw DomainError("csv line " + std::to_string(rows[1].first) + ": expected L,m");
        const double length = detail::number(dims[0], rows[1].first);
        const double m = detail::number(dims[1], rows[1].first);
        if (rows[2].second != "cell_left,value") {
            throw DomainError("csv line " + std::to_string(rows[2].first) + ": expected header cell_left,value");
        }
        if (!(m >= 1.0) || m != std::floor(m) || rows.size() - 3 != static_cast<std::size_t>(m)) {
            throw DomainError("csv: density declares m = " + dims[1] + " but has " +
                              std::to_string(rows.size() - 3) + " cells");
        }
        std::vector<double> values;
        for (std::size_t r = 3; r < rows.size(); ++r) {
            const auto cells = detail::split(rows[r].second);
            if (cells.size() != 2) {
                throw DomainError("csv line " + std::to_string(rows[r].first) + ": expected 2 fields");
            }
            values.push_back(detail::number(cells[1], rows[r].first));
        }
        return DensityGrid(length, std::move(values));
    }
    throw DomainError("csv: unrecognised header '" + header + "'");
}

inline Distribution read_distribution_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    return read_distribution(in);
}

inline EmpiricalMeasure read_measure_file(const std::string& path) {
    auto d = read_distribution_file(path);
    if (auto* mu = std::get_if<EmpiricalMeasure>(&d)) return std::move(*mu);
    throw DomainError(path + ": expected a measure (position,weight)");
}

}  // namespace wallsim::io
