#pragma once

// Comma-separated numeric tables: header row required, one number per cell,
// no quoting, no missing values.

#include "hddr/model_core.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hddr {

enum class CsvErrorKind { file_not_found, parse_error, missing_values, missing_column, write_error };

/// Line and column are 1-based; 0 when not applicable.
class CsvError : public std::runtime_error {
 public:
  CsvError(CsvErrorKind kind, std::size_t line, std::size_t col, const std::string& what);

  CsvErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t col() const noexcept { return col_; }

 private:
  CsvErrorKind kind_;
  std::size_t line_;
  std::size_t col_;
};

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;  // rows x header.size()

  /// Position of a named column; throws CsvError(missing_column).
  Eigen::Index column(const std::string& name) const;
};

/// Rows with empty or absent cells are rejected together: the error reports
/// how many there are and the first offending line.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

struct CsvDataset {
  Dataset data;
  std::optional<Vector> propensity;
};

/// Splits a table into outcome, exposure, optional propensity and
/// covariates; every other column is a covariate, in file order.
CsvDataset dataset_from_table(const CsvTable& table, const std::string& outcome_col,
                              const std::string& exposure_col,
                              const std::optional<std::string>& propensity_col = std::nullopt);

/// Writes outcome, exposure and the covariates (named L1.. when the dataset
/// has no column names) so that reading back restores every value exactly.
std::string dataset_to_csv(const Dataset& d, const std::string& outcome_col = "y",
                           const std::string& exposure_col = "a");
void write_dataset_csv(const std::string& path, const Dataset& d,
                       const std::string& outcome_col = "y", const std::string& exposure_col = "a");

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace hddr
