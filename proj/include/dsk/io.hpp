#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsk/common.hpp"

namespace dsk {

using Json = nlohmann::ordered_json;

// 17 significant digits, "nan"/"inf" spelled out.
std::string format_number(double v);

// Header row plus numeric rows; written with comma separators and LF endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<double>& row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

Json complex_json(cplx z);
Json vector_json(const std::vector<double>& v);
Json vector_json(const std::vector<cplx>& v);

// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);  // ConfigInvalid on failure

}  // namespace dsk
