#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spot::eval {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ParseError for an unknown column.
  std::size_t column(const std::string& name) const;
  // Non-numeric cells become NaN.
  std::vector<double> numbers(const std::string& name) const;
};

// Plain comma-separated text with a header row; ragged rows throw ParseError.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 420;
  bool log_y = false;
};

// Non-finite points (and non-positive y on a log axis) are skipped.
std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& options);

// One series per y column against x_column. Empty y_columns plots every other column.
std::string plot_csv_svg(const CsvTable& table, const std::string& x_column, std::vector<std::string> y_columns,
                         ChartOptions options);

}  // namespace spot::eval
