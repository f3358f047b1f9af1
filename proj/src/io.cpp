#include "kernelcurves/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kernelcurves {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin) throw std::invalid_argument("parse_real: not a number: '" + s + "'");
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  if (*end != '\0') throw std::invalid_argument("parse_real: trailing junk in '" + s + "'");
  return v;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& rows) {
  if (static_cast<Index>(header.size()) != rows.cols())
    throw std::invalid_argument("write_csv: header/column mismatch");
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) {
      if (c) out += ',';
      out += format_real(rows(r, c));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

namespace {
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}
}  // namespace

CsvFile read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  CsvFile csv;
  csv.header = split_line(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != csv.header.size())
      throw std::runtime_error("ragged csv row in " + path);
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_real(cells[i]);
    rows.push_back(std::move(row));
  }
  csv.rows.resize(static_cast<Index>(rows.size()), static_cast<Index>(csv.header.size()));
  for (Index r = 0; r < csv.rows.rows(); ++r)
    for (Index c = 0; c < csv.rows.cols(); ++c)
      csv.rows(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return csv;
}

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

}  // namespace kernelcurves
