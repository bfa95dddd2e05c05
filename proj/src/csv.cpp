#include "pnorm/csv.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace pnorm {

namespace {

std::string locate(const std::string& source, long row, long column) {
    std::ostringstream out;
    out << source;
    if (row > 0) out << ":" << row;
    if (column > 0) out << ":" << column;
    return out.str();
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                               : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path, 0, 0, "cannot open file");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError(path, 0, 0, "cannot open file for writing");
    return out;
}

}  // namespace

DataError::DataError(const std::string& source, long row, long column, const std::string& what)
    : std::runtime_error(locate(source, row, column) + ": " + what), row_(row), column_(column) {}

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::vector<std::vector<double>> rows;
    std::string line;
    long row = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError(source, row, 0,
                            "expected " + std::to_string(table.header.size()) + " cells, found "
                                + std::to_string(cells.size()));
        }
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], values[c])) {
                throw DataError(source, row, static_cast<long>(c + 1), "non-numeric cell '" + cells[c] + "'");
            }
        }
        rows.push_back(std::move(values));
    }
    if (!have_header) throw DataError(source, 0, 0, "empty file");
    if (rows.empty()) throw DataError(source, 0, 0, "no data rows");
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    auto in = open_in(path);
    return read_csv(in, path);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << values(r, c);
        out << "\n";
    }
}

MomentSample read_moment_csv(const std::string& path) {
    CsvTable t = read_csv_file(path);
    return MomentSample(std::move(t.values));
}

void write_moment_csv(std::ostream& out, const MomentSample& s) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < s.d(); ++j) header.push_back("h" + std::to_string(j + 1));
    write_csv(out, header, s.values());
}

void write_moment_csv_file(const std::string& path, const MomentSample& s) {
    auto out = open_out(path);
    write_moment_csv(out, s);
}

IvData read_iv_csv(const std::string& path) {
    const CsvTable t = read_csv_file(path);
    std::unordered_map<std::string, Eigen::Index> col;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (!col.emplace(t.header[c], static_cast<Eigen::Index>(c)).second) {
            throw DataError(path, 1, static_cast<long>(c + 1), "duplicate column '" + t.header[c] + "'");
        }
    }
    for (const char* name : {"y", "Y"}) {
        if (!col.count(name)) throw DataError(path, 1, 0, std::string("missing column '") + name + "'");
    }
    const auto d = static_cast<Eigen::Index>(t.header.size()) - 2;
    if (d < 1) throw DataError(path, 1, 0, "need at least one instrument column z1");
    IvData data;
    data.y = t.values.col(col.at("y"));
    data.Y = t.values.col(col.at("Y"));
    data.Z.resize(t.values.rows(), d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const std::string name = "z" + std::to_string(k + 1);
        const auto it = col.find(name);
        if (it == col.end()) throw DataError(path, 1, 0, "missing column '" + name + "'");
        data.Z.col(k) = t.values.col(it->second);
    }
    return data;
}

void write_iv_csv(std::ostream& out, const IvData& data) {
    const Eigen::Index d = data.Z.cols();
    std::vector<std::string> header{"y", "Y"};
    for (Eigen::Index k = 0; k < d; ++k) header.push_back("z" + std::to_string(k + 1));
    Matrix m(data.Z.rows(), d + 2);
    m.col(0) = data.y;
    m.col(1) = data.Y;
    m.rightCols(d) = data.Z;
    write_csv(out, header, m);
}

void write_iv_csv_file(const std::string& path, const IvData& data) {
    auto out = open_out(path);
    write_iv_csv(out, data);
}

}  // namespace pnorm
