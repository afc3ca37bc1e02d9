#include "hddr/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

namespace hddr {

CsvError::CsvError(CsvErrorKind kind, std::size_t line, std::size_t col, const std::string& what)
    : std::runtime_error(what), kind_(kind), line_(line), col_(col) {}

Eigen::Index CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return static_cast<Eigen::Index>(j);
  }
  throw CsvError(CsvErrorKind::missing_column, 1, 0, "column '" + name + "' not found in header");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_number(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    if (rest.substr(0, 3) == "\xEF\xBB\xBF") rest.remove_prefix(3);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  // Trailing blank lines are not rows.
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw CsvError(CsvErrorKind::parse_error, 1, 0, "empty file: header row required");

  CsvTable table;
  for (const auto cell : split(lines[0])) table.header.emplace_back(cell);
  const std::size_t cols = table.header.size();
  for (std::size_t j = 0; j < cols; ++j) {
    if (table.header[j].empty()) {
      throw CsvError(CsvErrorKind::parse_error, 1, j + 1, "empty column name in header");
    }
  }

  const std::size_t rows = lines.size() - 1;
  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t missing_rows = 0;
  std::size_t first_missing = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = r + 2;
    const auto cells = split(lines[r + 1]);
    if (cells.size() > cols) {
      throw CsvError(CsvErrorKind::parse_error, line_no, cols + 1,
                     "line " + std::to_string(line_no) + " has more cells than the header");
    }
    bool missing = cells.size() < cols;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (cells[j].empty()) {
        missing = true;
        continue;
      }
      double value = 0.0;
      if (!parse_number(cells[j], value)) {
        std::ostringstream msg;
        msg << "line " << line_no << ", column " << j + 1 << " ('" << table.header[j]
            << "'): cannot parse '" << cells[j] << "' as a number";
        throw CsvError(CsvErrorKind::parse_error, line_no, j + 1, msg.str());
      }
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = value;
    }
    if (missing) {
      if (missing_rows == 0) first_missing = line_no;
      ++missing_rows;
    }
  }
  if (missing_rows > 0) {
    std::ostringstream msg;
    msg << missing_rows << " row(s) with missing values, first at line " << first_missing
        << "; remove incomplete rows before testing";
    throw CsvError(CsvErrorKind::missing_values, first_missing, 0, msg.str());
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError(CsvErrorKind::file_not_found, 0, 0, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

CsvDataset dataset_from_table(const CsvTable& table, const std::string& outcome_col,
                              const std::string& exposure_col,
                              const std::optional<std::string>& propensity_col) {
  const Eigen::Index iy = table.column(outcome_col);
  const Eigen::Index ia = table.column(exposure_col);
  if (iy == ia) {
    throw CsvError(CsvErrorKind::missing_column, 1, 0, "outcome and exposure name the same column");
  }
  std::optional<Eigen::Index> ip;
  if (propensity_col) {
    ip = table.column(*propensity_col);
    if (*ip == iy || *ip == ia) {
      throw CsvError(CsvErrorKind::missing_column, 1, 0,
                     "propensity column must differ from outcome and exposure");
    }
  }
  std::vector<int> covariates;
  CsvDataset out;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(table.header.size()); ++j) {
    if (j == iy || j == ia || (ip && j == *ip)) continue;
    covariates.push_back(static_cast<int>(j));
    out.data.column_names.push_back(table.header[static_cast<std::size_t>(j)]);
  }
  out.data.y = table.values.col(iy);
  out.data.a = table.values.col(ia);
  out.data.L = table.values(Eigen::all, covariates);
  if (ip) out.propensity = Vector(table.values.col(*ip));
  return out;
}

std::string dataset_to_csv(const Dataset& d, const std::string& outcome_col,
                           const std::string& exposure_col) {
  std::string out;
  out += outcome_col + "," + exposure_col;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    out += ',';
    out += d.column_names.size() == static_cast<std::size_t>(d.p())
               ? d.column_names[static_cast<std::size_t>(j)]
               : "L" + std::to_string(j + 1);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    out += format_double(d.y[i]);
    out += ',';
    out += format_double(d.a[i]);
    for (Eigen::Index j = 0; j < d.p(); ++j) {
      out += ',';
      out += format_double(d.L(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CsvError(CsvErrorKind::write_error, 0, 0, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw CsvError(CsvErrorKind::write_error, 0, 0, "write to '" + path + "' failed");
}

void write_dataset_csv(const std::string& path, const Dataset& d, const std::string& outcome_col,
                       const std::string& exposure_col) {
  write_text_file(path, dataset_to_csv(d, outcome_col, exposure_col));
}

}  // namespace hddr
