#include "dsk/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dsk {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != header_.size())
    throw ValidationError("DimensionMismatch", "CSV row has " + std::to_string(row.size()) + " fields, header has " +
                                                   std::to_string(header_.size()));
  rows_.push_back(row);
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("OutputError", "cannot write " + path.string());
  f << str();
}

Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

Json vector_json(const std::vector<double>& v) {
  Json j = Json::array();
  for (double x : v) j.push_back(x);
  return j;
}

Json vector_json(const std::vector<cplx>& v) {
  Json j = Json::array();
  for (cplx z : v) j.push_back(complex_json(z));
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("OutputError", "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("ConfigInvalid", "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("ConfigInvalid", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace dsk
