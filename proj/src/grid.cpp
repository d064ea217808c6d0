/* Copyright 2026 The rcnn-mps Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "rcnn/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace rcnn {

std::string to_string(const Dims3& d) { return fmt::format("{}x{}x{}", d.nx, d.ny, d.nz); }

CategoricalGrid::CategoricalGrid(Dims3 dims, int num_categories, int fill)
    : dims_(dims), k_(num_categories) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
    throw std::invalid_argument("grid dimensions must be positive, got " + to_string(dims));
  }
  if (num_categories <= 0) throw std::invalid_argument("category count must be positive");
  if (fill < 0 || fill > num_categories) throw std::invalid_argument("fill code out of range");
  values_.assign(dims.size(), fill);
}

CategoricalGrid::CategoricalGrid(Dims3 dims, int num_categories, std::vector<int> values)
    : CategoricalGrid(dims, num_categories) {
  if (values.size() != dims.size()) {
    throw std::invalid_argument(fmt::format("grid {} needs {} values, got {}", to_string(dims),
                                            dims.size(), values.size()));
  }
  for (int v : values) {
    if (v < 0 || v > num_categories) {
      throw std::invalid_argument(fmt::format("category code {} outside 0..{}", v, num_categories));
    }
  }
  values_ = std::move(values);
}

Index3 CategoricalGrid::coords(std::size_t idx) const {
  const std::size_t plane = static_cast<std::size_t>(dims_.nx) * dims_.ny;
  const auto z = static_cast<int>(idx / plane);
  const std::size_t rem = idx % plane;
  return {static_cast<int>(rem % dims_.nx), static_cast<int>(rem / dims_.nx), z};
}

void CategoricalGrid::set(std::size_t i, int code) {
  if (code < 0 || code > k_) {
    throw std::invalid_argument(fmt::format("category code {} outside 0..{}", code, k_));
  }
  values_[i] = code;
}

std::size_t CategoricalGrid::count(int code) const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), code));
}

void WindowSpec::validate() const {
  if (!sg.all_odd() || !ip.all_odd() || sg.nx <= 0 || ip.nx <= 0 || sg.ny <= 0 || ip.ny <= 0 ||
      sg.nz <= 0 || ip.nz <= 0) {
    throw std::invalid_argument("search grid " + to_string(sg) + " and inner pattern " +
                                to_string(ip) + " must have odd positive extents");
  }
  if (ip.nx > sg.nx || ip.ny > sg.ny || ip.nz > sg.nz) {
    throw std::invalid_argument("inner pattern " + to_string(ip) + " exceeds search grid " +
                                to_string(sg));
  }
}

FormatError::FormatError(const std::string& what, std::size_t line)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

// Reads the three header lines and returns the stream positioned at the first record.
void read_header(std::istream& in, const std::filesystem::path& path, std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing title line in " + path.string(), 1);
  line_no = 1;
  if (!std::getline(in, line)) throw FormatError("missing variable count", 2);
  line_no = 2;
  int nvars = 0;
  if (!parse_number(trim(line), nvars) || nvars != 1) {
    throw FormatError("variable count must be 1, got '" + std::string(trim(line)) + "'", 2);
  }
  if (!std::getline(in, line)) throw FormatError("missing variable name", 3);
  line_no = 3;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

CategoricalGrid load_grid(const std::filesystem::path& path, Dims3 dims, int num_categories) {
  auto in = open_for_read(path);
  std::size_t line_no = 0;
  read_header(in, path, line_no);

  std::vector<int> values;
  values.reserve(dims.size());
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = trim(line);
    if (tok.empty()) continue;
    int v = 0;
    if (!parse_number(tok, v)) {
      throw FormatError("expected one integer category code, got '" + std::string(tok) + "'",
                        line_no);
    }
    if (v < 0 || v > num_categories) {
      throw FormatError(fmt::format("category code {} outside 0..{}", v, num_categories), line_no);
    }
    if (values.size() == dims.size()) {
      throw FormatError(fmt::format("more than {} records for grid {}", dims.size(),
                                    to_string(dims)),
                        line_no);
    }
    values.push_back(v);
  }
  if (values.size() != dims.size()) {
    throw FormatError(fmt::format("expected {} records for grid {}, found {}", dims.size(),
                                  to_string(dims), values.size()),
                      line_no);
  }
  return CategoricalGrid(dims, num_categories, std::move(values));
}

void save_grid(const CategoricalGrid& grid, const std::filesystem::path& path,
               const std::string& title) {
  auto out = open_for_write(path);
  std::string body;
  body.reserve(grid.size() * 2 + 64);
  body += title;
  body += "\n1\ncategory\n";
  char buf[16];
  for (int v : grid.values()) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    body.append(buf, end);
    body += '\n';
  }
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_real_map(std::span<const double> values, const std::filesystem::path& path,
                   const std::string& title, const std::string& variable) {
  auto out = open_for_write(path);
  out << title << "\n1\n" << variable << "\n";
  for (double v : values) out << fmt::format("{}\n", v);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<double> load_real_map(const std::filesystem::path& path, Dims3 dims) {
  auto in = open_for_read(path);
  std::size_t line_no = 0;
  read_header(in, path, line_no);
  std::vector<double> values;
  values.reserve(dims.size());
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = trim(line);
    if (tok.empty()) continue;
    double v = 0;
    if (!parse_number(tok, v)) throw FormatError("expected a real value", line_no);
    values.push_back(v);
  }
  if (values.size() != dims.size()) {
    throw FormatError(fmt::format("expected {} records, found {}", dims.size(), values.size()),
                      line_no);
  }
  return values;
}

Index3 nearest_node(const Dims3& dims, double x, double y, double z) {
  auto axis = [](double c, int n) {
    const auto i = static_cast<long>(std::ceil(c - 0.5));
    return static_cast<int>(std::clamp<long>(i, 0, n - 1));
  };
  return {axis(x, dims.nx), axis(y, dims.ny), axis(z, dims.nz)};
}

MigrationResult migrate_hard_data(const CategoricalGrid& grid, const DrillHoleSet& holes) {
  MigrationResult result{grid, 0, 0};
  std::unordered_map<std::size_t, int> claimed;
  claimed.reserve(holes.samples.size());
  for (const auto& s : holes.samples) {
    if (s.category < 1 || s.category > grid.num_categories()) {
      throw std::invalid_argument(fmt::format("hard datum carries invalid category {}", s.category));
    }
    const auto idx = grid.index(nearest_node(grid.dims(), s.x, s.y, s.z));
    auto [it, inserted] = claimed.emplace(idx, s.category);
    if (!inserted) {
      if (it->second != s.category) ++result.conflicts;
      continue;
    }
    result.grid.set(idx, s.category);
  }
  result.assigned_nodes = claimed.size();
  if (result.conflicts > 0) {
    spdlog::warn("hard-data migration: {} conflicting samples resolved first-wins",
                 result.conflicts);
  }
  return result;
}

void encode_window_into(const CategoricalGrid& grid, Index3 center, nn::Tensor& out,
                        int channel_offset) {
  const int wx = out.dx(), wy = out.dy(), wz = out.dz();
  const int k = grid.num_categories();
  if (wx % 2 == 0 || wy % 2 == 0 || wz % 2 == 0) {
    throw std::invalid_argument("window extents must be odd");
  }
  if (!grid.contains(center.x, center.y, center.z)) {
    throw std::out_of_range("window center outside grid");
  }
  if (channel_offset < 0 || channel_offset + k + 1 > out.channels()) {
    throw std::invalid_argument("window encoding exceeds tensor channels");
  }
  for (int c = 0; c <= k; ++c) {
    auto ch = out.channel(channel_offset + c);
    std::fill(ch.begin(), ch.end(), 0.0);
  }
  const int ox = center.x - wx / 2, oy = center.y - wy / 2, oz = center.z - wz / 2;
  for (int z = 0; z < wz; ++z) {
    const int gz = oz + z;
    for (int y = 0; y < wy; ++y) {
      const int gy = oy + y;
      const bool row_inside = gz >= 0 && gz < grid.nz() && gy >= 0 && gy < grid.ny();
      for (int x = 0; x < wx; ++x) {
        const int gx = ox + x;
        const int code = row_inside && gx >= 0 && gx < grid.nx() ? grid.at(gx, gy, gz) : kUnknown;
        out.at(channel_offset + code, x, y, z) = 1.0;
      }
    }
  }
}

CategoricalGrid extract_window(const CategoricalGrid& grid, Index3 center, Dims3 dims) {
  if (!dims.all_odd() || dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
    throw std::invalid_argument("window extents must be odd and positive, got " +
                                to_string(dims));
  }
  if (!grid.contains(center.x, center.y, center.z)) {
    throw std::out_of_range("window center outside grid");
  }
  CategoricalGrid window(dims, grid.num_categories());
  const int ox = center.x - dims.nx / 2, oy = center.y - dims.ny / 2, oz = center.z - dims.nz / 2;
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        if (grid.contains(ox + x, oy + y, oz + z)) {
          window.set(x, y, z, grid.at(ox + x, oy + y, oz + z));
        }
      }
    }
  }
  return window;
}

nn::Tensor one_hot_encode(const CategoricalGrid& window, int num_categories) {
  nn::Tensor t(num_categories + 1, window.nx(), window.ny(), window.nz());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const int code = window[i];
    if (code < 0 || code > num_categories) {
      throw std::invalid_argument(fmt::format("code {} outside 0..{}", code, num_categories));
    }
    t.channel(code)[i] = 1.0;
  }
  return t;
}

namespace {

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument(fmt::format("sampling fraction {} outside (0, 1)", fraction));
  }
}

}  // namespace

DrillHoleSet sample_drillholes(const CategoricalGrid& ti, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  std::vector<int> columns(static_cast<std::size_t>(ti.nx()) * ti.ny());
  std::iota(columns.begin(), columns.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(columns.begin(), columns.end(), rng);

  const double target = fraction * static_cast<double>(ti.size());
  DrillHoleSet set;
  set.source_fraction = fraction;
  std::size_t taken = 0;
  for (int col : columns) {
    if (static_cast<double>(taken) >= target - 1e-9) break;
    const int x = col % ti.nx(), y = col / ti.nx();
    for (int z = 0; z < ti.nz(); ++z) {
      const int code = ti.at(x, y, z);
      if (code == kUnknown) continue;
      set.samples.push_back({double(x), double(y), double(z), code});
    }
    taken += static_cast<std::size_t>(ti.nz());
  }
  return set;
}

DrillHoleSet sample_scattered(const CategoricalGrid& ti, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  std::vector<std::size_t> nodes(ti.size());
  std::iota(nodes.begin(), nodes.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(ti.size()) - 1e-9));
  DrillHoleSet set;
  set.source_fraction = fraction;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = ti.coords(nodes[i]);
    const int code = ti[nodes[i]];
    if (code == kUnknown) continue;
    set.samples.push_back({double(p.x), double(p.y), double(p.z), code});
  }
  return set;
}

void save_drillholes_csv(const DrillHoleSet& holes, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "x,y,z,category\n";
  for (const auto& s : holes.samples) out << fmt::format("{},{},{},{}\n", s.x, s.y, s.z, s.category);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

DrillHoleSet load_drillholes_csv(const std::filesystem::path& path, int num_categories) {
  auto in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "x,y,z,category") {
    throw FormatError("expected header 'x,y,z,category'", 1);
  }
  DrillHoleSet set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = row.find(',', start);
      fields.push_back(trim(row.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    HardDatum d;
    if (fields.size() != 4 || !parse_number(fields[0], d.x) || !parse_number(fields[1], d.y) ||
        !parse_number(fields[2], d.z) || !parse_number(fields[3], d.category)) {
      throw FormatError("expected 'x,y,z,category'", line_no);
    }
    if (d.category < 1 || d.category > num_categories) {
      throw FormatError(fmt::format("category {} outside 1..{}", d.category, num_categories),
                        line_no);
    }
    set.samples.push_back(d);
  }
  return set;
}

CategoricalGrid crop(const CategoricalGrid& grid, Index3 origin, Dims3 dims) {
  if (!grid.contains(origin.x, origin.y, origin.z) ||
      !grid.contains(origin.x + dims.nx - 1, origin.y + dims.ny - 1, origin.z + dims.nz - 1)) {
    throw std::out_of_range("crop " + to_string(dims) + " exceeds grid " + to_string(grid.dims()));
  }
  CategoricalGrid out(dims, grid.num_categories());
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x)
        out.set(x, y, z, grid.at(origin.x + x, origin.y + y, origin.z + z));
  return out;
}

}  // namespace rcnn
