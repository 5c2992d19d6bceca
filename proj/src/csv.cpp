#include "seqcore/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "seqcore/errors.hpp"

namespace seqcore {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<double> parse_row(const std::string& line, std::size_t row) {
  std::vector<double> values;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const std::string cell = trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (cell.empty()) throw IngestionError("empty cell", row);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || errno == ERANGE) {
      throw IngestionError("non-numeric cell '" + cell + "'", row);
    }
    values.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (has_header && row == 1) continue;
    if (trim(line).empty()) continue;
    auto values = parse_row(line, row);
    if (values.size() < 2) throw IngestionError("need at least one feature and a response", row);
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw IngestionError("expected " + std::to_string(width) + " columns, found " + std::to_string(values.size()),
                           row);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IngestionError("no data rows in '" + path + "'");

  const auto n = static_cast<Index>(rows.size());
  const auto d = static_cast<Index>(width - 1);
  RowMatrix x(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Index l = 0; l < d; ++l) x(i, l) = r[static_cast<std::size_t>(l)];
    y[i] = r.back();
  }
  try {
    return Dataset(std::move(x), std::move(y));
  } catch (const Error& e) {
    throw IngestionError(e.what());
  }
}

void write_csv(const std::string& path, const Dataset& data, bool header) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (out == nullptr) throw IngestionError("cannot write '" + path + "'");
  if (header) {
    for (Index l = 0; l < data.d(); ++l) std::fprintf(out, "x%ld,", static_cast<long>(l));
    std::fprintf(out, "y\n");
  }
  for (Index i = 0; i < data.n(); ++i) {
    for (Index l = 0; l < data.d(); ++l) std::fprintf(out, "%.17g,", data.features()(i, l));
    std::fprintf(out, "%.17g\n", data.response(i));
  }
  if (std::fclose(out) != 0) throw IngestionError("failed writing '" + path + "'");
}

}  // namespace seqcore
