#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "msmooth/sim.hpp"

namespace msmooth {

namespace {

bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first < last;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<std::vector<double>> load_csv_series(
    const std::filesystem::path& path, int n_columns, double dt, int max_steps) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open series file: " + path.string());

  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    double t = 0.0;
    if (!parse_double(cells[0], t)) {
      if (lineno == 1) continue;  // header
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected a numeric time");
    }
    if (cells.size() < 2)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": need at least one value column");
    if (width == 0) width = cells.size() - 1;
    if (cells.size() - 1 != width)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": ragged row");
    if (!times.empty() && t <= times.back())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": time must be strictly increasing");
    std::vector<double> vals(width);
    for (std::size_t i = 0; i < width; ++i) {
      if (!parse_double(cells[i + 1], vals[i]))
        throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                          ": bad number '" + cells[i + 1] + "'");
    }
    times.push_back(t);
    rows.push_back(std::move(vals));
  }
  if (times.empty()) throw ConfigError(path.string() + ": no data rows");

  if (width != 1 && static_cast<int>(width) < n_columns)
    throw ConfigError(path.string() + ": has " + std::to_string(width) +
                      " columns, need 1 or >= " + std::to_string(n_columns));

  // Sample at t0 + k*dt, linear between rows; stop at the last timestamp
  // rather than extrapolating past the data.
  const double t0 = times.front();
  const double span = times.back() - t0;
  const int avail = 1 + static_cast<int>(std::floor(span / dt + 1e-9));
  const int steps = std::min(max_steps, avail);
  std::vector<std::vector<double>> out(
      static_cast<std::size_t>(std::max(steps, 0)),
      std::vector<double>(static_cast<std::size_t>(n_columns)));
  std::size_t hi = 0;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * dt;
    while (hi + 1 < times.size() && times[hi + 1] < t) ++hi;
    for (int c = 0; c < n_columns; ++c) {
      const std::size_t col = width == 1 ? 0 : static_cast<std::size_t>(c);
      double val;
      if (t <= times.front()) {
        val = rows.front()[col];
      } else if (t >= times.back()) {
        val = rows.back()[col];
      } else {
        std::size_t i = hi;
        while (times[i + 1] < t) ++i;
        const double w = (t - times[i]) / (times[i + 1] - times[i]);
        val = rows[i][col] * (1.0 - w) + rows[i + 1][col] * w;
      }
      out[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] = val;
    }
  }
  return out;
}

}  // namespace msmooth
