#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "miest/core.hpp"

// Dataset ingestion. Two formats:
//  * CSV with a header naming each column: x0..x{dX-1} for continuous X,
//    yc0..yc{dY-1} for continuous Y, `y` for the categorical Y label and
//    `xd` for a categorical X label. Label columns hold integers.
//  * A compact binary column container ("MIBC"), magic "MIBC0001", then
//    u32 column count, u64 row count, then per column a u16-length-prefixed
//    name (same tags as CSV), then all columns back to back as little-endian
//    IEEE-754 64-bit floats in column-major order. Labels are stored as
//    integral-valued floats.

namespace miest {

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& buf, const std::string& path)
      : buf_(buf), path_(path) {}
  std::uint16_t u16() { return static_cast<std::uint16_t>(byte() | (byte() << 8)); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  std::string bytes(std::size_t n) {
    if (pos_ + n > buf_.size())
      throw IoError(path_ + ": truncated binary dataset");
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  unsigned byte() {
    if (pos_ >= buf_.size()) throw IoError(path_ + ": truncated binary dataset");
    return static_cast<unsigned char>(buf_[pos_++]);
  }
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

enum class ColumnTag { XCont, YCont, Y, XD };

struct ColumnInfo {
  ColumnTag tag;
  int index = 0;  // axis index for continuous tags
};

inline ColumnInfo classify_column(const std::string& name, const std::string& path) {
  auto parse_index = [&](std::size_t off) {
    int idx = -1;
    auto [p, ec] = std::from_chars(name.data() + off, name.data() + name.size(), idx);
    if (ec != std::errc() || p != name.data() + name.size() || idx < 0)
      throw IoError(path + ": bad column name '" + name + "'");
    return idx;
  };
  if (name == "y") return {ColumnTag::Y, 0};
  if (name == "xd") return {ColumnTag::XD, 0};
  if (name.rfind("yc", 0) == 0) return {ColumnTag::YCont, parse_index(2)};
  if (name.rfind("x", 0) == 0) return {ColumnTag::XCont, parse_index(1)};
  throw IoError(path + ": unrecognized column '" + name +
                "' (expected x<k>, yc<k>, y, or xd)");
}

inline int label_from_double(double v, const std::string& path, std::size_t line) {
  double r = std::nearbyint(v);
  if (!(std::abs(v - r) <= 1e-9) || std::abs(r) > 2147483000.0)
    throw IoError(path + ": line " + std::to_string(line) +
                  ": label column holds a non-integer value");
  return static_cast<int>(r);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ColumnTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;

  Dataset to_dataset(const std::string& path) const {
    int dx = 0, dy = 0;
    bool has_y = false, has_xd = false;
    std::vector<ColumnInfo> infos;
    infos.reserve(names.size());
    for (const auto& nm : names) {
      ColumnInfo ci = classify_column(nm, path);
      infos.push_back(ci);
      if (ci.tag == ColumnTag::XCont) dx = std::max(dx, ci.index + 1);
      if (ci.tag == ColumnTag::YCont) dy = std::max(dy, ci.index + 1);
      if (ci.tag == ColumnTag::Y) has_y = true;
      if (ci.tag == ColumnTag::XD) has_xd = true;
    }
    const std::size_t n = cols.empty() ? 0 : cols.front().size();

    Dataset d;
    if (dx > 0) d.x_cont = RowMatrixXd::Constant(n, dx, std::nan(""));
    if (dy > 0) d.y_cont = RowMatrixXd::Constant(n, dy, std::nan(""));
    if (has_y) d.y_disc = std::vector<int>(n, 0);
    if (has_xd) d.x_disc = std::vector<int>(n, 0);

    std::vector<bool> seen_x(dx, false), seen_y(dy, false);
    for (std::size_t c = 0; c < infos.size(); ++c) {
      const auto& ci = infos[c];
      const auto& col = cols[c];
      switch (ci.tag) {
        case ColumnTag::XCont:
          if (seen_x[ci.index])
            throw IoError(path + ": duplicate column '" + names[c] + "'");
          seen_x[ci.index] = true;
          for (std::size_t r = 0; r < n; ++r) (*d.x_cont)(r, ci.index) = col[r];
          break;
        case ColumnTag::YCont:
          if (seen_y[ci.index])
            throw IoError(path + ": duplicate column '" + names[c] + "'");
          seen_y[ci.index] = true;
          for (std::size_t r = 0; r < n; ++r) (*d.y_cont)(r, ci.index) = col[r];
          break;
        case ColumnTag::Y:
          for (std::size_t r = 0; r < n; ++r)
            (*d.y_disc)[r] = label_from_double(col[r], path, r + 2);
          break;
        case ColumnTag::XD:
          for (std::size_t r = 0; r < n; ++r)
            (*d.x_disc)[r] = label_from_double(col[r], path, r + 2);
          break;
      }
    }
    for (int a = 0; a < dx; ++a)
      if (!seen_x[a])
        throw IoError(path + ": missing column x" + std::to_string(a));
    for (int a = 0; a < dy; ++a)
      if (!seen_y[a])
        throw IoError(path + ": missing column yc" + std::to_string(a));
    return d;
  }
};

inline ColumnTable columns_from_dataset(const Dataset& d) {
  ColumnTable t;
  const auto n = static_cast<std::size_t>(d.n());
  auto add = [&](std::string name) -> std::vector<double>& {
    t.names.push_back(std::move(name));
    t.cols.emplace_back(n);
    return t.cols.back();
  };
  for (Eigen::Index a = 0; a < d.dx(); ++a) {
    auto& col = add("x" + std::to_string(a));
    for (std::size_t r = 0; r < n; ++r) col[r] = (*d.x_cont)(r, a);
  }
  for (Eigen::Index a = 0; a < d.dy(); ++a) {
    auto& col = add("yc" + std::to_string(a));
    for (std::size_t r = 0; r < n; ++r) col[r] = (*d.y_cont)(r, a);
  }
  if (d.x_disc) {
    auto& col = add("xd");
    for (std::size_t r = 0; r < n; ++r) col[r] = (*d.x_disc)[r];
  }
  if (d.y_disc) {
    auto& col = add("y");
    for (std::size_t r = 0; r < n; ++r) col[r] = (*d.y_disc)[r];
  }
  return t;
}

}  // namespace detail

inline std::string dataset_to_csv(const Dataset& d) {
  detail::ColumnTable t = detail::columns_from_dataset(d);
  std::string out;
  for (std::size_t c = 0; c < t.names.size(); ++c) {
    if (c) out += ',';
    out += t.names[c];
  }
  out += '\n';
  const auto n = static_cast<std::size_t>(d.n());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < t.names.size(); ++c) {
      if (c) out += ',';
      if (t.names[c] == "y" || t.names[c] == "xd")
        out += std::to_string(static_cast<long long>(t.cols[c][r]));
      else
        out += detail::format_double(t.cols[c][r]);
    }
    out += '\n';
  }
  return out;
}

inline Dataset dataset_from_csv(const std::string& text, const std::string& path = "<csv>") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  detail::ColumnTable t;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.erase(cell.begin());
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
      if (cell.empty()) throw IoError(path + ": empty column name in header");
      t.names.push_back(cell);
    }
  }
  t.cols.assign(t.names.size(), {});

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t c = 0, start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string cell = line.substr(start, comma == std::string::npos ? comma : comma - start);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.erase(cell.begin());
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
      if (c >= t.names.size())
        throw IoError(path + ": line " + std::to_string(lineno) + ": too many fields");
      double v;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size())
        throw IoError(path + ": line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      t.cols[c].push_back(v);
      ++c;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (c != t.names.size())
      throw IoError(path + ": line " + std::to_string(lineno) + ": wrong field count");
  }
  return t.to_dataset(path);
}

inline constexpr char kBinaryMagic[] = "MIBC0001";  // 8 bytes

inline std::string dataset_to_binary(const Dataset& d) {
  detail::ColumnTable t = detail::columns_from_dataset(d);
  std::string out(kBinaryMagic, 8);
  detail::put_u32(out, static_cast<std::uint32_t>(t.names.size()));
  detail::put_u64(out, static_cast<std::uint64_t>(d.n()));
  for (const auto& nm : t.names) {
    detail::put_u16(out, static_cast<std::uint16_t>(nm.size()));
    out += nm;
  }
  for (const auto& col : t.cols)
    for (double v : col) detail::put_f64(out, v);
  return out;
}

inline Dataset dataset_from_binary(const std::string& buf, const std::string& path = "<bin>") {
  if (buf.size() < 8 || std::memcmp(buf.data(), kBinaryMagic, 8) != 0)
    throw IoError(path + ": not a MIBC binary dataset");
  detail::ByteReader r(buf, path);
  r.bytes(8);
  const std::uint32_t ncols = r.u32();
  const std::uint64_t nrows = r.u64();
  if (ncols == 0 || ncols > 4096)
    throw IoError(path + ": unreasonable column count");
  detail::ColumnTable t;
  for (std::uint32_t c = 0; c < ncols; ++c) {
    std::uint16_t len = r.u16();
    t.names.push_back(r.bytes(len));
  }
  t.cols.assign(ncols, {});
  for (std::uint32_t c = 0; c < ncols; ++c) {
    t.cols[c].resize(nrows);
    for (std::uint64_t i = 0; i < nrows; ++i) t.cols[c][i] = r.f64();
  }
  return t.to_dataset(path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open file for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError(path + ": write failed");
}

// Reads a dataset, sniffing the binary magic and falling back to CSV.
inline Dataset load_dataset(const std::string& path) {
  std::string buf = read_file(path);
  if (buf.size() >= 8 && std::memcmp(buf.data(), kBinaryMagic, 8) == 0)
    return dataset_from_binary(buf, path);
  return dataset_from_csv(buf, path);
}

inline void save_dataset_csv(const std::string& path, const Dataset& d) {
  write_file(path, dataset_to_csv(d));
}
inline void save_dataset_binary(const std::string& path, const Dataset& d) {
  write_file(path, dataset_to_binary(d));
}

}  // namespace miest
