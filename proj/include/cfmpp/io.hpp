#ifndef CFMPP_IO_HPP
#define CFMPP_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfmpp/core.hpp"

namespace cfmpp {

using json = nlohmann::json;

/// Shortest decimal text that parses back to the same double ("inf", "-inf").
std::string format_double(double v);
double parse_double(std::string_view text);

json window_to_json(const Window& w);
Window window_from_json(const json& j);

json path_to_json(const CadlagPath& p);
CadlagPath path_from_json(const json& j);

json configuration_to_json(const Configuration& c);
Configuration configuration_from_json(const json& j);

void write_configuration_json(const std::filesystem::path& file, const Configuration& c);
Configuration read_configuration_json(const std::filesystem::path& file);

/// Flat CSV export: one row per (point, grid time); points with an empty mark
/// get a single row with blank grid_time/value. Window and reference travel in
/// '#' metadata lines above the header.
void write_configuration_csv(std::ostream& out, const Configuration& c);
Configuration read_configuration_csv(std::istream& in);

/// Comma-separated table with '#' metadata lines above a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void meta(const std::string& key, const std::string& value) { meta_.emplace_back(key, value); }
  void row(std::vector<std::string> cells);
  void row_numbers(const std::vector<double>& cells);

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& file) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace cfmpp

#endif  // CFMPP_IO_HPP
