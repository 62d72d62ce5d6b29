#pragma once
// Report serialization. Floats are written with 17 significant digits so every
// value round-trips; object keys are sorted, so equal reports are equal bytes.
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lyaplab {

using Json = nlohmann::json;

inline constexpr std::string_view kReportSchema = "lyaplab.report/1";

// %.17g; non-finite values become "nan", "inf" or "-inf".
std::string format_double(double x);

// Two-space indented JSON; non-finite floats are written as null.
std::string dump_json(const Json& doc);

class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  // Row width must match the header.
  void add_row(std::vector<double> row);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

// Creates parent directories; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lyaplab
