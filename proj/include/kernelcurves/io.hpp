#pragma once

#include <string>
#include <vector>

#include "kernelcurves/types.hpp"

namespace kernelcurves {

// All numeric output goes through one formatter: 17 significant digits, which
// round-trips IEEE doubles exactly through decimal.
std::string format_real(double v);
double parse_real(const std::string& s);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

struct CsvFile {
  std::vector<std::string> header;
  Matrix rows;
};

void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& rows);
CsvFile read_csv(const std::string& path);

// Sidecar path convention: "<path>.json" next to any CSV artifact.
std::string sidecar_path(const std::string& csv_path);

}  // namespace kernelcurves
