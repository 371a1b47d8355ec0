#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curvlab/error.hpp"
#include "curvlab/io.hpp"

namespace curvlab {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int k = 15; k >= 0; --k) {
    buf[k] = digits[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

void write_grid_csv(std::ostream& out, const PeriodicGridField& field) {
  out << "i,j";
  for (int c = 0; c < field.components(); ++c) out << ",c" << c;
  out << '\n';
  const int n = field.resolution();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      out << i << ',' << j;
      for (int c = 0; c < field.components(); ++c) out << ',' << format_double(field(i, j, c));
      out << '\n';
    }
}

PeriodicGridField read_grid_csv(std::istream& in, int n, Rank rank) {
  PeriodicGridField field(n, rank);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "grid csv: missing header");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) throw Error(ErrorCode::kIo, "grid csv: bad number '" + cell + "'");
      values.push_back(v);
    }
    if (values.size() != static_cast<std::size_t>(2 + field.components()))
      throw Error(ErrorCode::kIo, "grid csv: wrong column count");
    const int i = static_cast<int>(values[0]);
    const int j = static_cast<int>(values[1]);
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorCode::kIo, "grid csv: node out of range");
    for (int c = 0; c < field.components(); ++c) field(i, j, c) = values[2 + c];
    ++rows;
  }
  if (rows != field.node_count()) throw Error(ErrorCode::kIo, "grid csv: wrong number of rows");
  return field;
}

void write_grid_document(std::ostream& out, const PeriodicGridField& field) {
  nlohmann::json header = {{"format", "curvlab-grid"},
                           {"version", 1},
                           {"resolution", field.resolution()},
                           {"rank", to_string(field.rank())}};
  out << header.dump() << '\n';
  write_grid_csv(out, field);
}

PeriodicGridField read_grid_document(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "grid document: empty");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("grid document: bad header: ") + e.what());
  }
  if (header.value("format", "") != "curvlab-grid")
    throw Error(ErrorCode::kIo, "grid document: unknown format");
  return read_grid_csv(in, header.at("resolution").get<int>(),
                       rank_from_string(header.at("rank").get<std::string>()));
}

}  // namespace curvlab
