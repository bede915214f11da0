// Column tables with per-row error strings, CSV I/O and fits over columns

#pragma once

#include <string>
#include <vector>

#include "dqpt/fit.hpp"

namespace dqpt {

struct Table {
    std::string name;                  // file stem
    std::vector<std::string> columns;  // numeric columns; an "error" column is appended on output
    std::vector<std::string> units;    // one entry per column
    std::vector<std::vector<double>> rows;
    std::vector<std::string> errors;   // empty string when the row succeeded

    Table() = default;
    Table(std::string name_, std::vector<std::string> cols, std::vector<std::string> units_);

    void add_row(std::vector<double> values, std::string error = {});
    std::size_t column_index(const std::string& column) const;
    std::vector<double> column(const std::string& column) const;
    std::size_t failed_rows() const;
};

// Header line, '#' unit lines, rows at 17 significant digits, error column last.
std::string to_csv(const Table& t);
void write_csv(const Table& t, const std::string& path);
Table read_csv(const std::string& path);

struct FitSpec {
    std::string name;
    std::string table;
    std::string x;
    std::string y;
    std::string window_column;  // rows are kept when lo <= window_column <= hi
    double lo{0.0};
    double hi{kNoBound};
};

// Power-law fit of y against x over successful rows inside the window.
PowerLawFit fit_table(const Table& t, const FitSpec& spec);

} // namespace dqpt
