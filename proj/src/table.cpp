#include "dqpt/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dqpt {

Table::Table(std::string name_, std::vector<std::string> cols, std::vector<std::string> units_)
    : name(std::move(name_)), columns(std::move(cols)), units(std::move(units_))
{
    if (units.size() != columns.size()) throw std::invalid_argument("table " + name + ": units and columns differ");
}

void Table::add_row(std::vector<double> values, std::string error)
{
    if (values.size() != columns.size()) throw std::invalid_argument("table " + name + ": row width mismatch");
    rows.push_back(std::move(values));
    errors.push_back(std::move(error));
}

std::size_t Table::column_index(const std::string& column) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == column) return i;
    throw std::invalid_argument("table " + name + " has no column '" + column + "'");
}

std::vector<double> Table::column(const std::string& column) const
{
    const std::size_t k = column_index(column);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

std::size_t Table::failed_rows() const
{
    std::size_t n = 0;
    for (const auto& e : errors) n += e.empty() ? 0 : 1;
    return n;
}

namespace {

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& s)
{
    if (s.empty()) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string to_csv(const Table& t)
{
    std::ostringstream os;
    for (const auto& c : t.columns) os << c << ',';
    os << "error\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << "# " << t.columns[i] << ": " << t.units[i] << '\n';
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (double v : t.rows[r]) os << format_double(v) << ',';
        os << quote(t.errors[r]) << '\n';
    }
    return os.str();
}

void write_csv(const Table& t, const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << to_csv(t);
    if (!f) throw std::runtime_error("write failed for " + path);
}

Table read_csv(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    Table t;
    const auto slash = path.find_last_of('/');
    t.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (t.name.size() > 4 && t.name.ends_with(".csv")) t.name.resize(t.name.size() - 4);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.empty() || header.back() != "error") throw std::runtime_error(path + ": last column must be 'error'");
    header.pop_back();
    t.columns = header;
    t.units.assign(header.size(), "");
    std::size_t unit_i = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(": ");
            if (unit_i < t.units.size() && colon != std::string::npos) t.units[unit_i++] = line.substr(colon + 2);
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size() + 1) throw std::runtime_error(path + ": ragged row");
        std::vector<double> v;
        for (std::size_t i = 0; i < header.size(); ++i) v.push_back(std::strtod(cells[i].c_str(), nullptr));
        t.add_row(std::move(v), cells.back());
    }
    return t;
}

PowerLawFit fit_table(const Table& t, const FitSpec& spec)
{
    const std::size_t ix = t.column_index(spec.x), iy = t.column_index(spec.y);
    const std::size_t iw = t.column_index(spec.window_column.empty() ? spec.x : spec.window_column);
    std::vector<double> x, y;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (!t.errors[r].empty()) continue;
        const double w = t.rows[r][iw];
        if (!(w >= spec.lo && w <= spec.hi)) continue;
        x.push_back(t.rows[r][ix]);
        y.push_back(t.rows[r][iy]);
    }
    PowerLawFit f = fit_power_law(x, y);
    f.window_lo = spec.lo;
    f.window_hi = spec.hi;
    return f;
}

} // namespace dqpt
