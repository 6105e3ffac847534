#include "forge/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "forge/common.hpp"

namespace forge {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + tmp);
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ValidationError("rename failed: " + path);
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

double parse_value(std::string_view tok, int line_no) {
  // Trim spaces and an optional trailing CR from Windows line endings.
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() &&
         (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r'))
    tok.remove_suffix(1);
  double out = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ValidationError("line " + std::to_string(line_no) +
                          ": not a number: '" + std::string(tok) + "'");
  return out;
}

}  // namespace

std::vector<std::vector<double>> parse_matrix_csv(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty matrix file");
  long n = 0;
  {
    std::string_view sv = line;
    while (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), n);
    if (ec != std::errc() || ptr != sv.data() + sv.size() || n <= 0)
      throw ValidationError("first line must be a positive point count, got '" +
                            line + "'");
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = line;
    while (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    std::vector<double> row;
    row.reserve(n);
    std::size_t start = 0;
    while (true) {
      std::size_t comma = sv.find(',', start);
      std::string_view tok = (comma == std::string_view::npos)
                                 ? sv.substr(start)
                                 : sv.substr(start, comma - start);
      row.push_back(parse_value(tok, line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (static_cast<long>(row.size()) != n)
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n) + " values, got " +
                            std::to_string(row.size()));
    rows.push_back(std::move(row));
    if (static_cast<long>(rows.size()) == n) break;
  }
  if (static_cast<long>(rows.size()) != n)
    throw ValidationError("expected " + std::to_string(n) + " rows, got " +
                          std::to_string(rows.size()));
  return rows;
}

std::string format_matrix_csv(int n, const std::vector<double>& flat) {
  std::string out = std::to_string(n);
  out += '\n';
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) out += ',';
      out += format_double(flat[static_cast<std::size_t>(i) * n + j]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace forge
