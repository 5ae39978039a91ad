#pragma once

#include "psm/basis.hpp"
#include "psm/core.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace psm {

using json = nlohmann::json;

inline constexpr int kSurrogateFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json surrogate_to_json(const Surrogate& s) {
  s.validate();
  json box = json::array();
  for (const auto& iv : s.box) box.push_back({iv.lo, iv.hi});
  return json{{"format_version", kSurrogateFormatVersion},
              {"m", s.m},
              {"n", s.n},
              {"basis", to_string(s.basis)},
              {"box", box},
              {"coeffs", std::vector<double>(s.coeffs.data(), s.coeffs.data() + s.coeffs.size())}};
}

inline Surrogate surrogate_from_json(const json& j) {
  try {
    if (!j.is_object()) throw FormatError("surrogate: expected a JSON object");
    const int version = j.at("format_version").get<int>();
    if (version != kSurrogateFormatVersion) {
      throw FormatError("surrogate: unsupported format_version " + std::to_string(version) + " (expected " +
                        std::to_string(kSurrogateFormatVersion) + ")");
    }
    Surrogate s;
    s.m = j.at("m").get<int>();
    s.n = j.at("n").get<int>();
    s.basis = basis_from_string(j.at("basis").get<std::string>());
    for (const auto& iv : j.at("box")) {
      if (!iv.is_array() || iv.size() != 2) throw FormatError("surrogate: box entries must be [lo, hi] pairs");
      s.box.push_back(Interval{iv[0].get<double>(), iv[1].get<double>()});
    }
    const auto c = j.at("coeffs").get<std::vector<double>>();
    s.coeffs = Eigen::Map<const Vector>(c.data(), static_cast<Index>(c.size()));
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("surrogate: malformed file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("surrogate: ") + e.what());
  }
}

inline void save_surrogate(const Surrogate& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << surrogate_to_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline Surrogate load_surrogate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("surrogate: malformed file '" + path + "': " + e.what());
  }
  return surrogate_from_json(j);
}

/// %.17g: enough digits to reproduce any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Parses comma-separated rows of numbers; blank lines and lines starting
/// with '#' are skipped, as is a first line that does not parse as numbers.
inline std::vector<std::vector<double>> read_points_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) ok = false;
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw FormatError("points file: cannot parse line '" + line + "'");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace psm
