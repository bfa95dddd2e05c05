#pragma once

#include "pnorm/covariance.hpp"
#include "pnorm/dgp.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace pnorm {

/// Malformed or inconsistent data file. row and column are 1-based (row 1 is
/// the header); 0 means not applicable.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& source, long row, long column, const std::string& what);
    long row() const noexcept { return row_; }
    long column() const noexcept { return column_; }

private:
    long row_;
    long column_;
};

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

/// Comma-separated, header row first, every other row numeric with as many
/// cells as the header. Blank lines are ignored.
CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values);

/// One observation per row, one moment per column.
MomentSample read_moment_csv(const std::string& path);
/// Header h1..hd.
void write_moment_csv(std::ostream& out, const MomentSample& s);
void write_moment_csv_file(const std::string& path, const MomentSample& s);

/// Columns y, Y, z1..zd (matched by name, in any order).
IvData read_iv_csv(const std::string& path);
void write_iv_csv(std::ostream& out, const IvData& data);
void write_iv_csv_file(const std::string& path, const IvData& data);

}  // namespace pnorm
