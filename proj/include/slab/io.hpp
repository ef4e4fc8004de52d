#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace slab {

// ---- hashing -------------------------------------------------------------------

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
/// Hash of the file contents; throws std::runtime_error if unreadable.
std::string sha256_file(const std::string& path);

// ---- numeric tables ------------------------------------------------------------

/// Rectangular table of doubles with named columns, serialized as UTF-8 CSV
/// with a header row and %.17g values (round-trip exact).
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(const std::vector<double>& r);
  const std::vector<double>& row(std::size_t i) const { return rows[i]; }
  std::vector<double> column(const std::string& name) const;
};

void write_table_csv(const Table& t, const std::string& path);
Table read_table_csv(const std::string& path);

// ---- SVG plots -----------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Static line plot. Log axes drop nonpositive points; output contains no
/// timestamps or other run-dependent bytes, so identical inputs produce
/// identical files.
struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<Series> series;
};

void write_svg_plot(const PlotSpec& spec, const std::string& path);

// ---- TOML subset ---------------------------------------------------------------

/// Value in a flat TOML document: string, number, boolean, or numeric array.
struct TomlValue {
  enum class Kind { string, number, boolean, array };
  Kind kind = Kind::string;
  std::string str;
  double num = 0.0;
  bool b = false;
  std::vector<double> arr;

  static TomlValue of(const std::string& s);
  static TomlValue of(double v);
  static TomlValue of(bool v);
};

/// Keys are dotted: a key inside [section] becomes "section.key".
using TomlMap = std::map<std::string, TomlValue>;

/// Parses the subset used by run configs: [section] headers, `key = value`
/// lines with string / number / boolean / numeric-array values, and `#`
/// comments. Throws std::invalid_argument with a line number on anything
/// else (dates, nested tables, string arrays).
TomlMap parse_toml_text(const std::string& text);
TomlMap parse_toml_file(const std::string& path);

/// Applies a `key=value` override; the value is parsed with the same rules,
/// with an unquoted non-numeric token accepted as a bare string.
void apply_override(TomlMap& m, const std::string& keyval);

/// Serializes back to TOML ([section] groups in key order) for config echo.
std::string toml_to_text(const TomlMap& m);

// Typed getters with defaults; throw std::invalid_argument on kind mismatch.
double toml_num(const TomlMap& m, const std::string& key, double fallback);
bool toml_bool(const TomlMap& m, const std::string& key, bool fallback);
std::string toml_str(const TomlMap& m, const std::string& key,
                     const std::string& fallback);
std::vector<double> toml_arr(const TomlMap& m, const std::string& key,
                             const std::vector<double>& fallback);

}  // namespace slab
