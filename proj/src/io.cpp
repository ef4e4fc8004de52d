#include "slab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slab {

// ---- sha256 --------------------------------------------------------------------
// Compact FIPS 180-4 implementation; processes the whole buffer at once.

namespace {

constexpr std::uint32_t kSha256K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) {
  return (x >> n) | (x << (32 - n));
}

void sha256_block(std::uint32_t h[8], const std::uint8_t* p) {
  std::uint32_t w[64];
  for (int i = 0; i < 16; ++i)
    w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
           (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
  for (int i = 16; i < 64; ++i) {
    const std::uint32_t s0 =
        rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
    const std::uint32_t s1 =
        rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
    w[i] = w[i - 16] + s0 + w[i - 7] + s1;
  }
  std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
  std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
  for (int i = 0; i < 64; ++i) {
    const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
    const std::uint32_t ch = (e & f) ^ (~e & g);
    const std::uint32_t t1 = hh + S1 + ch + kSha256K[i] + w[i];
    const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
    const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
    const std::uint32_t t2 = S0 + maj;
    hh = g; g = f; f = e; e = d + t1;
    d = c; c = b; b = a; a = t1 + t2;
  }
  h[0] += a; h[1] += b; h[2] += c; h[3] += d;
  h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
}

}  // namespace

std::string sha256_hex(const void* data, std::size_t len) {
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::size_t full = len / 64;
  for (std::size_t i = 0; i < full; ++i) sha256_block(h, p + 64 * i);

  std::uint8_t tail[128] = {0};
  const std::size_t rem = len - 64 * full;
  std::memcpy(tail, p + 64 * full, rem);
  tail[rem] = 0x80;
  const std::size_t tail_len = (rem < 56) ? 64 : 128;
  const std::uint64_t bits = std::uint64_t(len) * 8;
  for (int i = 0; i < 8; ++i)
    tail[tail_len - 1 - i] = std::uint8_t(bits >> (8 * i));
  sha256_block(h, tail);
  if (tail_len == 128) sha256_block(h, tail + 64);

  char out[65];
  for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
  return std::string(out, 64);
}

std::string sha256_hex(const std::string& data) {
  return sha256_hex(data.data(), data.size());
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string s = ss.str();
  return sha256_hex(s.data(), s.size());
}

// ---- numeric tables ------------------------------------------------------------

void Table::add_row(const std::vector<double>& r) {
  if (r.size() != columns.size())
    throw std::invalid_argument("Table::add_row: width mismatch");
  rows.push_back(r);
}

std::vector<double> Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw std::invalid_argument("Table::column: no column " + name);
  const std::size_t j = std::size_t(it - columns.begin());
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][j];
  return out;
}

void write_table_csv(const Table& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_table_csv: cannot open " + path);
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    out << (j ? "," : "") << t.columns[j];
  out << "\n";
  char buf[40];
  for (const auto& r : t.rows) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

Table read_table_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_table_csv: cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_table_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::string::size_type pos = 0;
    while (pos <= line.size()) {
      auto next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      row.push_back(std::strtod(line.substr(pos, next - pos).c_str(), nullptr));
      pos = next + 1;
    }
    if (row.size() != t.columns.size())
      throw std::runtime_error("read_table_csv: ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---- SVG plots -----------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string fnum(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Round tick positions: ~5 steps of 1/2/5 x 10^k covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (mag * m >= raw) { step = mag * m; break; }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
    t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

}  // namespace

void write_svg_plot(const PlotSpec& spec, const std::string& path) {
  constexpr double W = 640, H = 440;
  constexpr double ml = 72, mr = 24, mt = 36, mb = 52;
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  // Collect transformed points per series.
  struct Pts { std::vector<std::pair<double, double>> p; };
  std::vector<Pts> data(spec.series.size());
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& sr = spec.series[s];
    const std::size_t np = std::min(sr.x.size(), sr.y.size());
    for (std::size_t i = 0; i < np; ++i) {
      double x = sr.x[i], y = sr.y[i];
      if (spec.logx) { if (!(x > 0)) continue; x = std::log10(x); }
      if (spec.logy) { if (!(y > 0)) continue; y = std::log10(y); }
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      data[s].p.emplace_back(x, y);
      xmin = std::min(xmin, x); xmax = std::max(xmax, x);
      ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
  }
  if (xmin > xmax) { xmin = 0; xmax = 1; }
  if (ymin > ymax) { ymin = 0; ymax = 1; }
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
  const double padx = 0.03 * (xmax - xmin), pady = 0.05 * (ymax - ymin);
  xmin -= padx; xmax += padx; ymin -= pady; ymax += pady;

  const auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  const auto py = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_svg_plot: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n<rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" font-size=\"15\" "
      << "text-anchor=\"middle\" font-family=\"sans-serif\">"
      << xml_escape(spec.title) << "</text>\n";

  // Axes box and ticks.
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (double t : nice_ticks(xmin, xmax)) {
    const double X = px(t);
    out << "<line x1=\"" << fnum(X) << "\" y1=\"" << H - mb << "\" x2=\""
        << fnum(X) << "\" y2=\"" << H - mb + 5 << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << fnum(X) << "\" y=\"" << H - mb + 18
        << "\" font-size=\"11\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\">"
        << (spec.logx ? "1e" + fnum(t) : fnum(t)) << "</text>\n";
  }
  for (double t : nice_ticks(ymin, ymax)) {
    const double Y = py(t);
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << fnum(Y) << "\" x2=\"" << ml
        << "\" y2=\"" << fnum(Y) << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << fnum(Y + 4)
        << "\" font-size=\"11\" text-anchor=\"end\" "
        << "font-family=\"sans-serif\">"
        << (spec.logy ? "1e" + fnum(t) : fnum(t)) << "</text>\n";
  }
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
      << "\" font-size=\"13\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\">" << xml_escape(spec.xlabel)
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
      << (mt + H - mb) / 2 << ")\">" << xml_escape(spec.ylabel) << "</text>\n";

  // Series polylines and legend.
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (data[s].p.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << palette[s % 8]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : data[s].p)
      out << fnum(px(x)) << "," << fnum(py(y)) << " ";
    out << "\"/>\n";
  }
  double ly = mt + 16;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    if (spec.series[s].label.empty()) continue;
    out << "<line x1=\"" << W - mr - 130 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << W - mr - 110 << "\" y2=\"" << ly - 4 << "\" stroke=\""
        << palette[s % 8] << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - mr - 105 << "\" y=\"" << ly
        << "\" font-size=\"11\" font-family=\"sans-serif\">"
        << xml_escape(spec.series[s].label) << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
}

// ---- TOML subset ---------------------------------------------------------------

TomlValue TomlValue::of(const std::string& s) {
  TomlValue v; v.kind = Kind::string; v.str = s; return v;
}
TomlValue TomlValue::of(double d) {
  TomlValue v; v.kind = Kind::number; v.num = d; return v;
}
TomlValue TomlValue::of(bool b) {
  TomlValue v; v.kind = Kind::boolean; v.b = b; return v;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    else if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

TomlValue parse_value(const std::string& raw, int lineno, bool bare_ok) {
  const std::string v = trim(raw);
  if (v.empty())
    throw std::invalid_argument("toml: empty value at line " +
                                std::to_string(lineno));
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw std::invalid_argument("toml: unterminated string at line " +
                                  std::to_string(lineno));
    std::string s;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size() &&
          (v[i + 1] == '"' || v[i + 1] == '\\'))
        s += v[++i];
      else
        s += v[i];
    }
    return TomlValue::of(s);
  }
  if (v == "true") return TomlValue::of(true);
  if (v == "false") return TomlValue::of(false);
  if (v.front() == '[') {
    if (v.back() != ']')
      throw std::invalid_argument("toml: unterminated array at line " +
                                  std::to_string(lineno));
    TomlValue out;
    out.kind = TomlValue::Kind::array;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      char* end = nullptr;
      const double d = std::strtod(item.c_str(), &end);
      if (end != item.c_str() + item.size())
        throw std::invalid_argument("toml: non-numeric array item at line " +
                                    std::to_string(lineno));
      out.arr.push_back(d);
    }
    return out;
  }
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() + v.size()) return TomlValue::of(d);
  if (bare_ok) return TomlValue::of(v);
  throw std::invalid_argument("toml: unsupported value '" + v + "' at line " +
                              std::to_string(lineno));
}

}  // namespace

TomlMap parse_toml_text(const std::string& text) {
  TomlMap m;
  std::stringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw std::invalid_argument("toml: bad section at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2)) + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("toml: expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("toml: empty key at line " +
                                  std::to_string(lineno));
    m[section + key] = parse_value(line.substr(eq + 1), lineno, false);
  }
  return m;
}

TomlMap parse_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("toml: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml_text(ss.str());
}

void apply_override(TomlMap& m, const std::string& keyval) {
  const auto eq = keyval.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override: expected key=value, got '" +
                                keyval + "'");
  m[trim(keyval.substr(0, eq))] = parse_value(keyval.substr(eq + 1), 0, true);
}

std::string toml_to_text(const TomlMap& m) {
  std::ostringstream out;
  std::string section;
  char buf[40];
  for (const auto& [key, v] : m) {
    const auto dot = key.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << leaf << " = ";
    switch (v.kind) {
      case TomlValue::Kind::string: out << '"' << v.str << '"'; break;
      case TomlValue::Kind::boolean: out << (v.b ? "true" : "false"); break;
      case TomlValue::Kind::number:
        std::snprintf(buf, sizeof buf, "%.17g", v.num);
        out << buf;
        break;
      case TomlValue::Kind::array:
        out << "[";
        for (std::size_t i = 0; i < v.arr.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", v.arr[i]);
          out << (i ? ", " : "") << buf;
        }
        out << "]";
        break;
    }
    out << "\n";
  }
  return out.str();
}

double toml_num(const TomlMap& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  if (it->second.kind != TomlValue::Kind::number)
    throw std::invalid_argument("config: " + key + " must be a number");
  return it->second.num;
}

bool toml_bool(const TomlMap& m, const std::string& key, bool fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  if (it->second.kind != TomlValue::Kind::boolean)
    throw std::invalid_argument("config: " + key + " must be a boolean");
  return it->second.b;
}

std::string toml_str(const TomlMap& m, const std::string& key,
                     const std::string& fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  if (it->second.kind != TomlValue::Kind::string)
    throw std::invalid_argument("config: " + key + " must be a string");
  return it->second.str;
}

std::vector<double> toml_arr(const TomlMap& m, const std::string& key,
                             const std::vector<double>& fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  if (it->second.kind == TomlValue::Kind::array) return it->second.arr;
  if (it->second.kind == TomlValue::Kind::number) return {it->second.num};
  throw std::invalid_argument("config: " + key + " must be a numeric array");
}

}  // namespace slab
