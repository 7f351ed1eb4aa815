#include "qcstab/io.hpp"

#include "qcstab/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace qcstab {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t start = cell.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? std::string() : cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t row, std::size_t col) {
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(value)) {
        std::ostringstream os;
        os << "mapping CSV: row " << row << ", column " << col + 1 << ": not a finite number '" << s << "'";
        throw FormatError(os.str());
    }
    return value;
}

}  // namespace

GridMapping read_mapping_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw FormatError("mapping CSV: missing header");

    int n = 0;
    int m = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        const bool is_x = h.size() > 1 && h[0] == 'x';
        const bool is_v = h.size() > 1 && h[0] == 'v';
        if (!is_x && !is_v) throw FormatError("mapping CSV: header column '" + h + "' is neither xI nor vI");
        const std::string suffix = h.substr(1);
        int index = 0;
        auto res = std::from_chars(suffix.data(), suffix.data() + suffix.size(), index);
        if (res.ec != std::errc() || res.ptr != suffix.data() + suffix.size())
            throw FormatError("mapping CSV: bad header column '" + h + "'");
        if (is_x) {
            if (m != 0 || index != n + 1) throw FormatError("mapping CSV: header must be x1..xn followed by v1..vm");
            ++n;
        } else {
            if (index != m + 1) throw FormatError("mapping CSV: header must be x1..xn followed by v1..vm");
            ++m;
        }
    }
    if (n < 2 || m < 1) throw FormatError("mapping CSV: need at least two x columns and one v column");

    std::vector<std::vector<double>> coords;
    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << "mapping CSV: row " << row << " has " << cells.size() << " columns, expected " << header.size();
            throw FormatError(os.str());
        }
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            x[static_cast<std::size_t>(a)] = parse_double(cells[static_cast<std::size_t>(a)], row, static_cast<std::size_t>(a));
        for (int mu = 0; mu < m; ++mu) {
            const auto c = static_cast<std::size_t>(n + mu);
            values.push_back(parse_double(cells[c], row, c));
        }
        coords.push_back(std::move(x));
    }
    if (coords.empty()) throw FormatError("mapping CSV: no data rows");

    // Axis 0 is slowest, so the last axis cycles first. Count distinct values
    // per axis from row order: nodes on axis a repeat every stride_a rows.
    std::vector<double> lower(static_cast<std::size_t>(n)), upper(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        lower[ua] = upper[ua] = coords[0][ua];
        for (const auto& x : coords) {
            lower[ua] = std::min(lower[ua], x[ua]);
            upper[ua] = std::max(upper[ua], x[ua]);
        }
        if (!(lower[ua] < upper[ua])) throw FormatError("mapping CSV: degenerate extent on an axis");
    }
    std::vector<int> nodes(static_cast<std::size_t>(n), 1);
    std::size_t stride = 1;
    for (int a = n - 1; a >= 0; --a) {
        const auto ua = static_cast<std::size_t>(a);
        const double tol = 1e-9 * (upper[ua] - lower[ua]);
        int count = 1;
        while (stride * static_cast<std::size_t>(count) < coords.size() &&
               std::abs(coords[stride * static_cast<std::size_t>(count)][ua] - coords[0][ua]) > tol)
            ++count;
        nodes[ua] = count;
        stride *= static_cast<std::size_t>(count);
    }
    if (stride != coords.size()) throw FormatError("mapping CSV: rows do not form a tensor-product lattice");

    Grid grid(Domain(lower, upper), nodes);
    for (std::size_t r = 0; r < coords.size(); ++r) {
        for (int a = 0; a < n; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            const double tol = 1e-9 * (upper[ua] - lower[ua]);
            if (std::abs(coords[r][ua] - grid.coordinate(r, a)) > tol) {
                std::ostringstream os;
                os << "mapping CSV: data row " << r + 1 << " coordinate x" << a + 1
                   << " is off the lattice (expected " << format_number(grid.coordinate(r, a)) << ")";
                throw FormatError(os.str());
            }
        }
    }
    return GridMapping(std::move(grid), m, std::move(values));
}

GridMapping read_mapping_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open mapping file '" + path + "'");
    return read_mapping_csv(in);
}

void write_mapping_csv(std::ostream& out, const GridMapping& v) {
    const Grid& grid = v.grid();
    const int n = grid.dim();
    for (int a = 0; a < n; ++a) out << (a ? "," : "") << 'x' << a + 1;
    for (int mu = 0; mu < v.m(); ++mu) out << ",v" << mu + 1;
    out << '\n';
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        for (int a = 0; a < n; ++a) out << (a ? "," : "") << format_number(grid.coordinate(node, a));
        for (double x : v.value(node)) out << ',' << format_number(x);
        out << '\n';
    }
}

void write_mapping_csv_file(const std::string& path, const GridMapping& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write '" + path + "'");
    write_mapping_csv(out, v);
}

}  // namespace qcstab
