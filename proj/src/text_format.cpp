#include "text_format.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "isarec/error.hpp"

namespace isarec::text {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw InputError("bad number '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw InputError("bad integer '" + std::string(s) + "'");
  return v;
}

void write_row(std::ostream& out,
               const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) out << ' ';
    out << format_double(row[j]);
  }
  out << '\n';
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) write_row(out, m.row(i));
}

std::string next_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line))
    throw InputError("unexpected end of file while reading " +
                     std::string(what));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

Eigen::RowVectorXd read_row(std::istream& in, Eigen::Index cols,
                            std::string_view what) {
  const std::string line = next_line(in, what);
  Eigen::RowVectorXd row(cols);
  std::istringstream ss(line);
  std::string tok;
  Eigen::Index j = 0;
  while (ss >> tok) {
    if (j == cols)
      throw InputError(std::string(what) + ": too many values in row");
    row[j++] = parse_double(tok);
  }
  if (j != cols)
    throw InputError(std::string(what) + ": expected " + std::to_string(cols) +
                     " values, got " + std::to_string(j));
  return row;
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows,
                            Eigen::Index cols, std::string_view what) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = read_row(in, cols, what);
  return m;
}

const std::string& Section::get(const std::string& key) const {
  auto it = fields.find(key);
  if (it == fields.end())
    throw InputError("section [" + name + "] lacks field '" + key + "'");
  return it->second;
}

double Section::number(const std::string& key) const {
  return parse_double(get(key));
}

long long Section::integer(const std::string& key) const {
  return parse_int(get(key));
}

Section parse_section(const std::string& line) {
  if (line.size() < 3 || line[0] != '[')
    throw InputError("expected a section line, got '" + line + "'");
  const auto close = line.find(']');
  if (close == std::string::npos)
    throw InputError("unterminated section name in '" + line + "'");
  Section s;
  s.name = line.substr(1, close - 1);
  std::istringstream ss(line.substr(close + 1));
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw InputError("bad field '" + tok + "' in section [" + s.name + "]");
    s.fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return s;
}

Section expect_section(std::istream& in, std::string_view name) {
  Section s = parse_section(next_line(in, name));
  if (s.name != name)
    throw InputError("expected section [" + std::string(name) + "], found [" +
                     s.name + "]");
  return s;
}

}  // namespace isarec::text
